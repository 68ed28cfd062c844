#include "vrdlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "vrdlab/rng.hpp"

namespace vrd {

const char* to_string(SamplerStrategy s) {
    switch (s) {
        case SamplerStrategy::RandomSampling: return "rs";
        case SamplerStrategy::Bnps: return "bnps";
        case SamplerStrategy::Bnps2Cls: return "bnps-2cls";
        case SamplerStrategy::Bnps3Cls: return "bnps-3cls";
        case SamplerStrategy::Bnps3ClsHn: return "bnps-3cls-hn";
        case SamplerStrategy::Ohem: return "ohem";
    }
    return "?";
}

SamplerStrategy sampler_strategy_from_string(const std::string& s) {
    for (SamplerStrategy k :
         {SamplerStrategy::RandomSampling, SamplerStrategy::Bnps, SamplerStrategy::Bnps2Cls,
          SamplerStrategy::Bnps3Cls, SamplerStrategy::Bnps3ClsHn, SamplerStrategy::Ohem}) {
        if (s == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown sampler strategy: " + s);
}

namespace {

bool is_negative(ProposalClass c) { return c != ProposalClass::Pos; }

// Negative grouping per strategy, as (relative share, class list). Shares are
// scaled so the negatives jointly carry (1 - positive_ratio).
std::vector<std::pair<double, std::vector<ProposalClass>>> negative_scheme(SamplerStrategy s) {
    using P = ProposalClass;
    switch (s) {
        case SamplerStrategy::RandomSampling:
            return {{1.0, {P::Neg1, P::Neg2, P::Neg3, P::Neg4, P::Neg5}}};
        case SamplerStrategy::Bnps:
            return {{0.2, {P::Neg1}}, {0.2, {P::Neg2}}, {0.2, {P::Neg3}},
                    {0.2, {P::Neg4}}, {0.2, {P::Neg5}}};
        case SamplerStrategy::Bnps2Cls:
            return {{0.5, {P::Neg1, P::Neg2}}, {0.5, {P::Neg3, P::Neg4, P::Neg5}}};
        case SamplerStrategy::Bnps3Cls:
            return {{1.0 / 3.0, {P::Neg1}}, {1.0 / 3.0, {P::Neg2}},
                    {1.0 / 3.0, {P::Neg3, P::Neg4, P::Neg5}}};
        case SamplerStrategy::Bnps3ClsHn:
            // 0.15 / 0.15 / 0.45 at the canonical 0.25 positive ratio
            return {{0.2, {P::Neg1}}, {0.2, {P::Neg2}}, {0.6, {P::Neg3, P::Neg4, P::Neg5}}};
        case SamplerStrategy::Ohem:
            throw std::invalid_argument("assign_weights: OHEM selects by loss, not by weight");
    }
    return {};
}

}  // namespace

WeightAssignment assign_weights(const ClassDistribution& dist,
                                std::span<const ProposalClass> classes,
                                SamplerStrategy strategy, double positive_ratio) {
    if (positive_ratio <= 0.0 || positive_ratio >= 1.0) {
        throw std::invalid_argument("assign_weights: positive_ratio must lie in (0,1)");
    }
    if (static_cast<std::int64_t>(classes.size()) != dist.total) {
        throw std::invalid_argument("assign_weights: class list does not match distribution");
    }
    if (dist.count(ProposalClass::Pos) <= 0) {
        throw std::invalid_argument(
            "assign_weights: scene has no positive proposal and cannot be trained on");
    }

    WeightAssignment out;

    WeightGroup positives;
    positives.mass = positive_ratio;
    std::array<std::vector<int>, kNumProposalClasses> by_class;
    for (size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == ProposalClass::Pos) {
            positives.members.push_back(static_cast<int>(i));
        } else {
            by_class[static_cast<size_t>(classes[i])].push_back(static_cast<int>(i));
        }
    }
    out.groups.push_back(std::move(positives));

    std::vector<WeightGroup> neg_groups;
    double live_share = 0.0;
    for (const auto& [share, members_of] : negative_scheme(strategy)) {
        WeightGroup g;
        g.mass = share;  // provisional, rescaled below
        for (ProposalClass c : members_of) {
            const auto& idx = by_class[static_cast<size_t>(c)];
            g.members.insert(g.members.end(), idx.begin(), idx.end());
        }
        if (!g.members.empty()) {
            live_share += share;
            neg_groups.push_back(std::move(g));
        }
    }

    // Empty groups forfeit their share to the remaining negative groups in
    // proportion; a scene with no negatives at all puts full mass on the
    // positives.
    const double negative_mass = neg_groups.empty() ? 0.0 : 1.0 - positive_ratio;
    if (neg_groups.empty()) out.groups[0].mass = 1.0;
    for (WeightGroup& g : neg_groups) {
        g.mass = negative_mass * (g.mass / live_share);
        out.groups.push_back(std::move(g));
    }

    out.weights.resize(classes.size());
    for (const WeightGroup& g : out.groups) {
        const double w = g.mass / static_cast<double>(g.members.size());
        for (int i : g.members) {
            out.weights[static_cast<size_t>(i)] = ProposalWeight{i, w};
        }
    }
    return out;
}

std::vector<int> sample_batch(const WeightAssignment& assignment, const SamplerConfig& config) {
    if (config.batch_size < 1) throw std::invalid_argument("sample_batch: batch_size must be >= 1");
    if (assignment.groups.empty()) throw std::invalid_argument("sample_batch: no groups");

    double total = 0.0;
    for (const WeightGroup& g : assignment.groups) total += g.mass;
    if (total <= 0.0) throw std::invalid_argument("sample_batch: zero total mass");

    std::vector<double> cumulative;
    cumulative.reserve(assignment.groups.size());
    double acc = 0.0;
    for (const WeightGroup& g : assignment.groups) {
        acc += g.mass / total;
        cumulative.push_back(acc);
    }
    cumulative.back() = 1.0;

    // Per-group pools; a group larger than its expected quota is drawn
    // without replacement (members swap-removed as they are taken), smaller
    // groups recycle members.
    std::vector<std::vector<int>> pools;
    std::vector<bool> without_replacement;
    for (const WeightGroup& g : assignment.groups) {
        pools.push_back(g.members);
        const double quota = (g.mass / total) * static_cast<double>(config.batch_size);
        without_replacement.push_back(static_cast<double>(g.members.size()) >= quota);
    }

    CounterRng rng(hash_mix(config.seed, 0x5a3fb01dULL));
    std::vector<int> batch;
    batch.reserve(static_cast<size_t>(config.batch_size));
    for (int n = 0; n < config.batch_size; ++n) {
        const double u = rng.uniform();
        size_t gi = static_cast<size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        if (gi >= pools.size()) gi = pools.size() - 1;

        auto& pool = pools[gi];
        if (pool.empty()) pool = assignment.groups[gi].members;  // exhausted: refill
        const size_t pick = static_cast<size_t>(rng.below(pool.size()));
        batch.push_back(pool[pick]);
        if (without_replacement[gi]) {
            std::swap(pool[pick], pool.back());
            pool.pop_back();
        }
    }
    return batch;
}

std::vector<int> ohem_select(std::span<const ProposalClass> classes,
                             std::span<const double> losses, int batch_size,
                             double positive_ratio) {
    if (classes.size() != losses.size()) {
        throw std::invalid_argument("ohem_select: classes/losses size mismatch");
    }
    for (double l : losses) {
        if (!std::isfinite(l)) throw std::invalid_argument("ohem_select: non-finite loss");
    }

    std::vector<int> positives;
    std::vector<int> negatives;
    for (size_t i = 0; i < classes.size(); ++i) {
        (is_negative(classes[i]) ? negatives : positives).push_back(static_cast<int>(i));
    }

    const int pos_quota = static_cast<int>(
        std::lround(positive_ratio * static_cast<double>(batch_size)));

    std::vector<int> selected;
    if (static_cast<int>(positives.size()) > pos_quota) {
        // mining applies to negatives only; surplus positives drop by index order
        positives.resize(static_cast<size_t>(pos_quota));
    }
    selected = positives;

    const int neg_quota = std::min(batch_size - static_cast<int>(selected.size()),
                                   static_cast<int>(negatives.size()));
    std::stable_sort(negatives.begin(), negatives.end(), [&](int a, int b) {
        return losses[static_cast<size_t>(a)] > losses[static_cast<size_t>(b)];
    });
    negatives.resize(static_cast<size_t>(std::max(neg_quota, 0)));
    std::sort(negatives.begin(), negatives.end());
    selected.insert(selected.end(), negatives.begin(), negatives.end());
    return selected;
}

double chi_square_p_value(double statistic, int dof) {
    if (dof < 1) throw std::invalid_argument("chi_square_p_value: dof must be >= 1");
    if (statistic <= 0.0) return 1.0;
    boost::math::chi_squared dist(static_cast<double>(dof));
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

}  // namespace vrd

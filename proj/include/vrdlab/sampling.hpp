#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrdlab/proposals.hpp"

namespace vrd {

enum class SamplerStrategy {
    RandomSampling,  // positives at the positive ratio, one uniform negative pool
    Bnps,            // five negative classes, equal mass each
    Bnps2Cls,        // negative groups {N1+N2, N3+N4+N5}, equal mass
    Bnps3Cls,        // negative groups {N1, N2, N3+N4+N5}, equal mass
    Bnps3ClsHn,      // same groups, hard-negative heavy masses (0.15, 0.15, 0.45)
    Ohem,            // loss-ranked selection; see ohem_select
};

const char* to_string(SamplerStrategy s);
SamplerStrategy sampler_strategy_from_string(const std::string& s);

struct SamplerConfig {
    SamplerStrategy strategy = SamplerStrategy::Bnps;
    int batch_size = 64;
    double positive_ratio = 0.25;
    std::uint64_t seed = 0;
};

struct ProposalWeight {
    int proposal = 0;  // index into the classified proposal list
    double weight = 0.0;
};

// A sampling group: a set of proposals sharing one probability mass. Members
// of a group draw uniformly within it, so every member's individual weight is
// mass / |members|.
struct WeightGroup {
    double mass = 0.0;
    std::vector<int> members;
};

struct WeightAssignment {
    std::vector<ProposalWeight> weights;  // one entry per proposal, group mass spread evenly
    std::vector<WeightGroup> groups;      // groups[0] is always the positive group
};

// Builds per-proposal sampling weights for the given strategy. Group masses
// follow the strategy's scheme at the given positive ratio; the defaults
// reproduce the canonical constants (0.25 positive, 0.15 per negative class
// for the five-way scheme). The mass of an empty negative group is
// redistributed proportionally over the remaining non-empty negative groups,
// keeping the positive ratio fixed. Throws std::invalid_argument when the
// scene has no positive proposal (unusable for training).
WeightAssignment assign_weights(const ClassDistribution& dist,
                                std::span<const ProposalClass> classes,
                                SamplerStrategy strategy,
                                double positive_ratio = 0.25);

// Draws batch_size proposal indices. Each draw picks a group by its mass via
// inverse CDF over the cumulative masses, then a member uniformly within the
// group: without replacement while the group is larger than its expected
// batch quota, with replacement otherwise. Deterministic given (weights,
// config.seed).
std::vector<int> sample_batch(const WeightAssignment& assignment, const SamplerConfig& config);

// Online hard example mining over one scene's classified proposals: positives
// fill the positive quota (all of them when fewer), the rest of the batch is
// the highest-loss negatives. Ties and the positive overflow case resolve by
// ascending proposal index.
std::vector<int> ohem_select(std::span<const ProposalClass> classes,
                             std::span<const double> losses, int batch_size,
                             double positive_ratio = 0.25);

// Survival p-value of the chi-square statistic; used by goodness-of-fit
// checks on sampled class frequencies.
double chi_square_p_value(double statistic, int dof);

}  // namespace vrd

#pragma once

#include <map>
#include <vector>

namespace divs {

struct NodeTiming {
    int node_id = 0;
    long long frames_held = 0;       // n_j
    double seconds_per_frame = 1.0;  // mean over the assessment period
    double epoch_time() const { return seconds_per_frame * static_cast<double>(frames_held); }
};

// floor((T_bar - T_j) / t_bar_j), floor toward minus infinity. Negative:
// frames to emigrate; positive: capacity to absorb; zero: neither.
long long migration_amount(double t_bar, double t_j, double seconds_per_frame);

// Root-mean-square deviation of epoch times from t_bar.
double balance_metric(const std::vector<double>& epoch_times, double t_bar);

// Inclusive threshold, as specified: migrate when B >= theta.
bool should_migrate(double balance, double theta_balance);

struct MigrationCandidate {
    int node_id = 0;
    long long amount = 0;  // signed delta-n: < 0 in L_Out, > 0 in L_In
};

struct MigrationLists {
    std::vector<MigrationCandidate> out_list;  // emigration, sorted by node id
    std::vector<MigrationCandidate> in_list;   // immigration, sorted by node id
};

// P1 filter: keep only nodes with |delta| > xi, split by sign.
MigrationLists build_lists(const std::map<int, long long>& deltas, long long xi);

struct Move {
    int src = 0;
    int dst = 0;
    long long frames = 0;  // > 0
};

struct MigrationPlan {
    std::vector<Move> moves;
    // Leftover delta-n for every node that entered matching.
    std::map<int, long long> residuals;
};

// P2 exact matching (|n_out + n_in| <= xi pairs, ascending id, out-major),
// then the greedy max-matching loop: largest in against largest out until a
// list empties. Ties break toward the lower node id. Amounts that reach zero
// drop out without emitting a move, keeping every emitted move positive.
MigrationPlan match_migrations(const MigrationLists& lists, long long xi);

// Frame ownership per node; the engine binds these counts to concrete frames.
using OwnershipCounts = std::map<int, long long>;

// Applies plan moves to the counts. Throws if a move exceeds the source's
// holdings. Total frames are conserved.
OwnershipCounts apply_plan(const OwnershipCounts& state, const MigrationPlan& plan);

}  // namespace divs

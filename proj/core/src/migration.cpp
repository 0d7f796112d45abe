#include "divs/migration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace divs {

long long migration_amount(double t_bar, double t_j, double seconds_per_frame) {
    if (!(seconds_per_frame > 0.0)) {
        throw std::invalid_argument("migration_amount: seconds per frame must be > 0");
    }
    return static_cast<long long>(std::floor((t_bar - t_j) / seconds_per_frame));
}

double balance_metric(const std::vector<double>& epoch_times, double t_bar) {
    if (epoch_times.empty()) {
        throw std::invalid_argument("balance_metric: empty time list");
    }
    double acc = 0.0;
    for (double t : epoch_times) {
        const double d = t - t_bar;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(epoch_times.size()));
}

bool should_migrate(double balance, double theta_balance) {
    if (theta_balance < 0.0) {
        throw std::invalid_argument("should_migrate: threshold must be >= 0");
    }
    return balance >= theta_balance;
}

MigrationLists build_lists(const std::map<int, long long>& deltas, long long xi) {
    if (xi < 0) throw std::invalid_argument("build_lists: xi must be >= 0");
    MigrationLists lists;
    for (const auto& [node, delta] : deltas) {  // std::map iterates in id order
        if (delta < 0 && -delta > xi) {
            lists.out_list.push_back({node, delta});
        } else if (delta > 0 && delta > xi) {
            lists.in_list.push_back({node, delta});
        }
    }
    return lists;
}

namespace {

// Index of the candidate with the largest |amount|; ties go to the lower id.
// Lists are id-sorted and stay id-sorted under erasure, so the first maximum
// encountered is the lowest-id one.
std::size_t find_max_abs(const std::vector<MigrationCandidate>& list) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < list.size(); ++i) {
        if (std::llabs(list[i].amount) > std::llabs(list[best].amount)) best = i;
    }
    return best;
}

}  // namespace

MigrationPlan match_migrations(const MigrationLists& lists, long long xi) {
    if (xi < 0) throw std::invalid_argument("match_migrations: xi must be >= 0");

    std::vector<MigrationCandidate> outs = lists.out_list;
    std::vector<MigrationCandidate> ins = lists.in_list;
    MigrationPlan plan;

    // P2: exact matches first, whole-amount transfers between near-equal pairs.
    for (std::size_t oi = 0; oi < outs.size();) {
        bool matched = false;
        for (std::size_t ii = 0; ii < ins.size(); ++ii) {
            if (std::llabs(outs[oi].amount + ins[ii].amount) <= xi) {
                const long long amount = std::min(ins[ii].amount, -outs[oi].amount);
                if (amount > 0) {
                    plan.moves.push_back({outs[oi].node_id, ins[ii].node_id, amount});
                }
                plan.residuals[outs[oi].node_id] = outs[oi].amount + amount;
                plan.residuals[ins[ii].node_id] = ins[ii].amount - amount;
                ins.erase(ins.begin() + static_cast<std::ptrdiff_t>(ii));
                outs.erase(outs.begin() + static_cast<std::ptrdiff_t>(oi));
                matched = true;
                break;
            }
        }
        if (!matched) ++oi;
    }

    // P3 greedy loop: largest immigration capacity against largest emigration
    // need; each iteration removes one node, so it runs at most |L_Out|+|L_In|
    // times.
    while (!outs.empty() && !ins.empty()) {
        const std::size_t oi = find_max_abs(outs);
        const std::size_t ii = find_max_abs(ins);
        const long long out_abs = -outs[oi].amount;
        const long long in_amt = ins[ii].amount;

        if (in_amt > out_abs) {
            // The out node is fully drained.
            if (out_abs > 0) {
                plan.moves.push_back({outs[oi].node_id, ins[ii].node_id, out_abs});
            }
            plan.residuals[outs[oi].node_id] = 0;
            ins[ii].amount -= out_abs;
            outs.erase(outs.begin() + static_cast<std::ptrdiff_t>(oi));
        } else {
            // The in node is fully used.
            if (in_amt > 0) {
                plan.moves.push_back({outs[oi].node_id, ins[ii].node_id, in_amt});
            }
            plan.residuals[ins[ii].node_id] = 0;
            outs[oi].amount += in_amt;
            ins.erase(ins.begin() + static_cast<std::ptrdiff_t>(ii));
        }
    }

    for (const auto& c : outs) plan.residuals[c.node_id] = c.amount;
    for (const auto& c : ins) plan.residuals[c.node_id] = c.amount;
    return plan;
}

OwnershipCounts apply_plan(const OwnershipCounts& state, const MigrationPlan& plan) {
    OwnershipCounts next = state;
    for (const auto& move : plan.moves) {
        if (move.frames <= 0) {
            throw std::invalid_argument("apply_plan: non-positive move amount");
        }
        auto src = next.find(move.src);
        if (src == next.end() || src->second < move.frames) {
            throw std::invalid_argument(
                "apply_plan: move of " + std::to_string(move.frames) + " frames exceeds node " +
                std::to_string(move.src) + " holdings");
        }
        src->second -= move.frames;
        next[move.dst] += move.frames;
    }
    return next;
}

}  // namespace divs

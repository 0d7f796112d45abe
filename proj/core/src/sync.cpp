#include "divs/sync.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "divs/topology.hpp"

namespace divs {

WeightSet make_weight_set(std::string model_id, int version, std::optional<int> origin,
                          std::shared_ptr<const std::vector<std::string>> keys,
                          std::vector<double> values) {
    if (!keys) throw std::invalid_argument("weight set: null key schema");
    if (keys->size() != values.size()) {
        throw std::invalid_argument("weight set: " + std::to_string(keys->size()) +
                                    " keys vs " + std::to_string(values.size()) + " values");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("weight set: non-finite parameter value");
        }
    }
    WeightSet w;
    w.model_id = std::move(model_id);
    w.version = version;
    w.origin = origin;
    w.keys = std::move(keys);
    w.values = std::move(values);
    return w;
}

double contribution(double k_j, double k_bar, double exponent_cap) {
    if (!std::isfinite(k_j) || !std::isfinite(k_bar)) {
        throw std::invalid_argument("contribution: non-finite batch size");
    }
    const double exponent = k_j - k_bar;
    if (exponent > exponent_cap) {
        throw std::overflow_error("contribution: exponent " + std::to_string(exponent) +
                                  " exceeds cap " + std::to_string(exponent_cap) +
                                  " (pathological batch skew)");
    }
    return std::exp(exponent);
}

Contribution make_contribution(int node_id, double k_j, double k_bar, double exponent_cap) {
    Contribution c;
    c.node_id = node_id;
    c.k_j = k_j;
    c.k_bar = k_bar;
    c.q = contribution(k_j, k_bar, exponent_cap);
    return c;
}

AggregationMode aggregation_mode_from_string(const std::string& name) {
    if (name == "raw") return AggregationMode::Raw;
    if (name == "normalized") return AggregationMode::Normalized;
    throw std::invalid_argument("unknown aggregation mode: " + name);
}

std::string to_string(AggregationMode mode) {
    return mode == AggregationMode::Raw ? "raw" : "normalized";
}

namespace {

bool same_keys(const WeightSet& a, const WeightSet& b) {
    if (a.keys == b.keys) return true;
    return a.keys && b.keys && *a.keys == *b.keys;
}

}  // namespace

WeightSet aggregate(const std::vector<WeightSet>& locals,
                    const std::vector<Contribution>& contribs, AggregationMode mode) {
    if (locals.empty()) throw std::invalid_argument("aggregate: empty local list");
    if (contribs.size() != locals.size()) {
        throw std::invalid_argument("aggregate: need exactly one contribution per local");
    }

    // Ascending node-id order makes the summation deterministic.
    std::vector<std::size_t> order(locals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return locals[x].origin.value_or(kCloudId) < locals[y].origin.value_or(kCloudId);
    });

    const WeightSet& first = locals[order[0]];
    for (const auto& w : locals) {
        if (w.model_id != first.model_id) {
            throw std::invalid_argument("aggregate: model id mismatch (" + w.model_id +
                                        " vs " + first.model_id + ")");
        }
        if (w.version != first.version) {
            throw std::invalid_argument("aggregate: version mismatch (" +
                                        std::to_string(w.version) + " vs " +
                                        std::to_string(first.version) + ")");
        }
        if (!same_keys(w, first)) {
            throw std::invalid_argument("aggregate: key-order mismatch for model " + w.model_id);
        }
    }

    auto q_of = [&](int node_id) {
        for (const auto& c : contribs) {
            if (c.node_id == node_id) return c.q;
        }
        throw std::invalid_argument("aggregate: no contribution for node " +
                                    std::to_string(node_id));
    };

    std::vector<double> out(first.values.size(), 0.0);
    double q_sum = 0.0;
    for (std::size_t idx : order) {
        const WeightSet& w = locals[idx];
        const double q = q_of(w.origin.value_or(kCloudId));
        q_sum += q;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w.values[k] * q;
    }
    if (mode == AggregationMode::Normalized) {
        for (auto& v : out) v /= q_sum;
    }

    return make_weight_set(first.model_id, first.version, std::nullopt, first.keys,
                           std::move(out));
}

BatchRoundResult batch_round(const std::vector<NodeBatch>& nodes, const WeightSet& global_in,
                             const NodeTrainer& trainer, AggregationMode mode,
                             double exponent_cap, CommLedger* ledger, int parent, int round) {
    if (nodes.empty()) throw std::invalid_argument("batch_round: no nodes");

    const int next_version = global_in.version + 1;
    double k_sum = 0.0;
    for (const auto& n : nodes) k_sum += n.k_j;
    const double k_bar = k_sum / static_cast<double>(nodes.size());

    BatchRoundResult result;
    result.locals.reserve(nodes.size());
    std::vector<Contribution> contribs;
    contribs.reserve(nodes.size());

    for (const auto& n : nodes) {
        WeightSet local;
        if (n.sample_count == 0) {
            // Empty batch: the node contributes its input weights unchanged.
            result.empty_batch_nodes.push_back(n.node_id);
            local = make_weight_set(global_in.model_id, next_version, n.node_id, global_in.keys,
                                    global_in.values);
        } else {
            local = trainer(global_in, n);
            if (local.version != next_version || !local.origin ||
                *local.origin != n.node_id) {
                throw std::logic_error("batch_round: trainer returned a mis-labeled local");
            }
        }
        contribs.push_back(make_contribution(n.node_id, n.k_j, k_bar, exponent_cap));
        if (ledger) {
            ledger->record({CommEvent::Kind::WeightUpload, round, n.node_id, parent,
                            local.byte_size()});
        }
        result.locals.push_back(std::move(local));
    }

    result.global = aggregate(result.locals, contribs, mode);
    if (ledger) {
        for (const auto& n : nodes) {
            ledger->record({CommEvent::Kind::WeightBroadcast, round, parent, n.node_id,
                            result.global.byte_size()});
        }
    }
    return result;
}

bool converged(const std::vector<WeightSet>& history, double tolerance) {
    if (history.size() < 2) {
        throw std::invalid_argument("converged: need at least 2 versions");
    }
    const WeightSet& a = history[history.size() - 2];
    const WeightSet& b = history.back();
    if (a.values.size() != b.values.size()) {
        throw std::invalid_argument("converged: parameter count changed between versions");
    }
    double max_delta = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        max_delta = std::max(max_delta, std::abs(a.values[k] - b.values[k]));
    }
    return max_delta < tolerance;
}

}  // namespace divs

#ifndef DATESPOT_HMM_HPP
#define DATESPOT_HMM_HPP

// GMM-HMM core: diagonal-covariance mixture emissions, left-to-right
// character models, composite decoding networks (keyword / filler / line),
// Viterbi decoding, forced alignment, and embedded training with mixture
// growing.

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "datespot/alphabet.hpp"
#include "datespot/features.hpp"
#include "datespot/grammar.hpp"

namespace datespot {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(double a, double b) {
    if (a == kLogZero) return b;
    if (b == kLogZero) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ---------------------------------------------------------------------------
// Emissions
// ---------------------------------------------------------------------------

struct GmmComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> var;  // diagonal covariance
};

struct GmmEmission {
    int dim = 0;
    std::vector<GmmComponent> comps;

    // Cached per-component log(weight) - 0.5*sum(log(2*pi*var)) and 1/(2*var).
    mutable std::vector<double> log_const_;
    mutable std::vector<std::vector<double>> half_inv_var_;

    void invalidate_cache() const {
        log_const_.clear();
        half_inv_var_.clear();
    }

    void prepare() const {
        log_const_.resize(comps.size());
        half_inv_var_.resize(comps.size());
        const double log2pi = std::log(2.0 * M_PI);
        for (size_t k = 0; k < comps.size(); ++k) {
            double c = std::log(comps[k].weight);
            auto& hiv = half_inv_var_[k];
            hiv.resize(size_t(dim));
            for (int d = 0; d < dim; ++d) {
                double v = comps[k].var[size_t(d)];
                c -= 0.5 * (log2pi + std::log(v));
                hiv[size_t(d)] = 0.5 / v;
            }
            log_const_[k] = c;
        }
    }

    double component_log_density(size_t k, std::span<const float> x) const {
        double acc = log_const_[k];
        const auto& mu = comps[k].mean;
        const auto& hiv = half_inv_var_[k];
        for (int d = 0; d < dim; ++d) {
            double diff = double(x[size_t(d)]) - mu[size_t(d)];
            acc -= diff * diff * hiv[size_t(d)];
        }
        return acc;
    }
};

inline double gmm_log_density(const GmmEmission& em, std::span<const float> x) {
    if (int(x.size()) != em.dim) throw std::invalid_argument("gmm_log_density: dimension mismatch");
    if (em.log_const_.size() != em.comps.size()) em.prepare();
    double acc = kLogZero;
    for (size_t k = 0; k < em.comps.size(); ++k)
        acc = log_sum_exp(acc, em.component_log_density(k, x));
    return acc;
}

// ---------------------------------------------------------------------------
// Character models
// ---------------------------------------------------------------------------

/// Strict left-to-right model: each state has a self-loop and an advance
/// transition only; the final state's advance leaves the unit.
struct CharacterHmm {
    std::string symbol;
    int num_states = 0;
    std::vector<GmmEmission> states;
    std::vector<double> log_self;
    std::vector<double> log_next;
};

using ModelSet = std::map<std::string, CharacterHmm>;

inline CharacterHmm make_flat_character(const std::string& symbol, int num_states, int dim,
                                        const std::vector<double>& mean,
                                        const std::vector<double>& var) {
    CharacterHmm m;
    m.symbol = symbol;
    m.num_states = num_states;
    m.states.resize(size_t(num_states));
    for (auto& em : m.states) {
        em.dim = dim;
        em.comps = {GmmComponent{1.0, mean, var}};
    }
    m.log_self.assign(size_t(num_states), std::log(0.5));
    m.log_next.assign(size_t(num_states), std::log(0.5));
    return m;
}

// ---------------------------------------------------------------------------
// Composite networks
// ---------------------------------------------------------------------------

struct CompositeNetwork {
    enum class Kind { Keyword, Filler, Line, Transcript };

    struct State {
        const GmmEmission* em = nullptr;
        double log_self = kLogZero;
        int unit_id = -1;
        int state_in_unit = 0;
        bool in_keyword = false;
    };

    Kind kind = Kind::Keyword;
    std::vector<State> states;
    std::vector<std::string> unit_labels;               // by unit_id
    std::vector<std::pair<int, double>> entries;        // (state, log prob)
    std::vector<double> exit_logp;                      // per state
    // Cross-state transitions, grouped by destination for the DP.
    std::vector<std::vector<std::pair<int, double>>> in_edges;

    int num_states() const { return int(states.size()); }

    void add_edge(int from, int to, double logp) { in_edges[size_t(to)].push_back({from, logp}); }

    /// Append one instance of a character model; returns (first, last) state.
    std::pair<int, int> add_unit(const CharacterHmm& m, bool in_keyword) {
        int unit_id = int(unit_labels.size());
        unit_labels.push_back(m.symbol);
        int first = num_states();
        for (int j = 0; j < m.num_states; ++j) {
            State s;
            s.em = &m.states[size_t(j)];
            s.log_self = m.log_self[size_t(j)];
            s.unit_id = unit_id;
            s.state_in_unit = j;
            s.in_keyword = in_keyword;
            states.push_back(s);
            in_edges.emplace_back();
            exit_logp.push_back(kLogZero);
        }
        for (int j = 0; j + 1 < m.num_states; ++j)
            add_edge(first + j, first + j + 1, m.log_next[size_t(j)]);
        return {first, first + m.num_states - 1};
    }

    /// Log probability of leaving a unit through its last state.
    double unit_exit_logp(int last_state) const {
        // The advance probability of the last state is not stored on an edge;
        // recover it from the model via 1 - self.
        double self = std::exp(states[size_t(last_state)].log_self);
        return std::log(std::max(1e-12, 1.0 - self));
    }

    void sort_edges() {
        for (auto& preds : in_edges)
            std::sort(preds.begin(), preds.end());
    }
};

/// Compile a symbol-level network against a model set. Each labeled edge of
/// the NFA becomes one unit instance; epsilon structure becomes direct
/// connections with uniform branch mass.
inline CompositeNetwork compile_symbolnet(const SymbolNet& sn, const ModelSet& models,
                                          bool in_keyword = true) {
    // Epsilon closures.
    std::vector<std::vector<int>> eps(size_t(sn.num_nodes));
    for (const auto& e : sn.edges)
        if (e.label.empty()) eps[size_t(e.from)].push_back(e.to);
    auto closure = [&](int node) {
        std::vector<bool> seen(size_t(sn.num_nodes), false);
        std::vector<int> stack = {node}, out;
        seen[size_t(node)] = true;
        while (!stack.empty()) {
            int s = stack.back();
            stack.pop_back();
            out.push_back(s);
            for (int t : eps[size_t(s)])
                if (!seen[size_t(t)]) {
                    seen[size_t(t)] = true;
                    stack.push_back(t);
                }
        }
        return seen;
    };

    std::vector<int> labeled;  // indices of labeled edges
    for (size_t i = 0; i < sn.edges.size(); ++i)
        if (!sn.edges[i].label.empty()) labeled.push_back(int(i));

    CompositeNetwork net;
    net.kind = in_keyword ? CompositeNetwork::Kind::Keyword : CompositeNetwork::Kind::Transcript;
    std::vector<std::pair<int, int>> unit_span(labeled.size());  // first/last state
    for (size_t u = 0; u < labeled.size(); ++u) {
        const auto& e = sn.edges[size_t(labeled[u])];
        auto it = models.find(e.label);
        if (it == models.end())
            throw std::runtime_error("compile_symbolnet: no model for symbol '" + e.label + "'");
        unit_span[u] = net.add_unit(it->second, in_keyword);
    }

    // Entries: units whose source node is epsilon-reachable from the start.
    auto start_set = closure(sn.start);
    std::vector<int> start_units;
    for (size_t u = 0; u < labeled.size(); ++u)
        if (start_set[size_t(sn.edges[size_t(labeled[u])].from)]) start_units.push_back(int(u));
    if (start_units.empty()) throw std::runtime_error("compile_symbolnet: no reachable unit");
    double entry_logp = -std::log(double(start_units.size()));
    for (int u : start_units) net.entries.push_back({unit_span[size_t(u)].first, entry_logp});

    // Successors and finality per unit.
    for (size_t u = 0; u < labeled.size(); ++u) {
        auto reach = closure(sn.edges[size_t(labeled[u])].to);
        std::vector<int> succ;
        for (size_t v = 0; v < labeled.size(); ++v)
            if (reach[size_t(sn.edges[size_t(labeled[v])].from)]) succ.push_back(int(v));
        bool final = reach[size_t(sn.accept)];
        int branches = int(succ.size()) + (final ? 1 : 0);
        if (branches == 0)
            throw std::runtime_error("compile_symbolnet: dead-end unit '" +
                                     sn.edges[size_t(labeled[u])].label + "'");
        int last = unit_span[u].second;
        double leave = net.unit_exit_logp(last) - std::log(double(branches));
        for (int v : succ) net.add_edge(last, unit_span[size_t(v)].first, leave);
        if (final) net.exit_logp[size_t(last)] = leave;
    }
    net.sort_edges();
    return net;
}

/// Ergodic loop over every model: entry -> any unit, unit -> any unit or exit.
inline CompositeNetwork build_filler(const ModelSet& models) {
    if (models.empty()) throw std::invalid_argument("build_filler: empty model set");
    CompositeNetwork net;
    net.kind = CompositeNetwork::Kind::Filler;
    std::vector<std::pair<int, int>> spans;
    for (const auto& [sym, m] : models) spans.push_back(net.add_unit(m, false));
    double entry_logp = -std::log(double(spans.size()));
    for (auto [first, last] : spans) net.entries.push_back({first, entry_logp});
    double branch = -std::log(double(spans.size()) + 1.0);
    for (auto [first, last] : spans) {
        double leave = net.unit_exit_logp(last) + branch;
        for (auto [f2, l2] : spans) net.add_edge(last, f2, leave);
        net.exit_logp[size_t(last)] = leave;
    }
    net.sort_edges();
    return net;
}

/// Linear concatenation of one model per transcript label (forced alignment).
inline CompositeNetwork build_transcript_network(const std::vector<std::string>& labels,
                                                 const ModelSet& models) {
    if (labels.empty()) throw std::invalid_argument("empty transcript");
    CompositeNetwork net;
    net.kind = CompositeNetwork::Kind::Transcript;
    int prev_last = -1;
    for (const auto& label : labels) {
        auto it = models.find(label);
        if (it == models.end())
            throw std::runtime_error("no model for transcript symbol '" + label + "'");
        auto [first, last] = net.add_unit(it->second, false);
        if (prev_last < 0)
            net.entries.push_back({first, 0.0});
        else
            net.add_edge(prev_last, first, net.unit_exit_logp(prev_last));
        prev_last = last;
    }
    net.exit_logp[size_t(prev_last)] = net.unit_exit_logp(prev_last);
    net.sort_edges();
    return net;
}

/// filler* . keyword . filler* topology for span discovery on a full line.
inline CompositeNetwork build_line_network(const CompositeNetwork& keyword,
                                           const CompositeNetwork& filler) {
    CompositeNetwork net;
    net.kind = CompositeNetwork::Kind::Line;

    auto append = [&](const CompositeNetwork& src, bool keep_keyword_flag) {
        int state_off = net.num_states();
        int unit_off = int(net.unit_labels.size());
        net.unit_labels.insert(net.unit_labels.end(), src.unit_labels.begin(),
                               src.unit_labels.end());
        for (const auto& s : src.states) {
            CompositeNetwork::State t = s;
            t.unit_id += unit_off;
            t.in_keyword = keep_keyword_flag && s.in_keyword;
            net.states.push_back(t);
            net.in_edges.emplace_back();
            net.exit_logp.push_back(kLogZero);
        }
        for (size_t to = 0; to < src.in_edges.size(); ++to)
            for (auto [from, logp] : src.in_edges[to])
                net.add_edge(from + state_off, int(to) + state_off, logp);
        return state_off;
    };

    int pre_off = append(filler, false);
    int kw_off = append(keyword, true);
    int post_off = append(filler, false);

    const double half = std::log(0.5);
    // Line entry: straight into the keyword or into the leading filler.
    for (auto [s, lp] : keyword.entries) net.entries.push_back({s + kw_off, lp + half});
    for (auto [s, lp] : filler.entries) net.entries.push_back({s + pre_off, lp + half});
    // Leading filler exit: loop handled inside filler already via unit->unit
    // edges; its exit mass enters the keyword.
    for (size_t s = 0; s < filler.exit_logp.size(); ++s) {
        if (filler.exit_logp[s] == kLogZero) continue;
        for (auto [k, lp] : keyword.entries)
            net.add_edge(int(s) + pre_off, k + kw_off, filler.exit_logp[s] + lp);
    }
    // Keyword exit: end of line or trailing filler.
    for (size_t s = 0; s < keyword.exit_logp.size(); ++s) {
        if (keyword.exit_logp[s] == kLogZero) continue;
        net.exit_logp[size_t(int(s) + kw_off)] = keyword.exit_logp[s] + half;
        for (auto [f, lp] : filler.entries)
            net.add_edge(int(s) + kw_off, f + post_off, keyword.exit_logp[s] + half + lp);
    }
    // Trailing filler exit ends the line.
    for (size_t s = 0; s < filler.exit_logp.size(); ++s)
        if (filler.exit_logp[s] != kLogZero)
            net.exit_logp[size_t(int(s) + post_off)] = filler.exit_logp[s];
    net.sort_edges();
    return net;
}

// ---------------------------------------------------------------------------
// Viterbi decoding
// ---------------------------------------------------------------------------

struct Alignment {
    double log_likelihood = kLogZero;
    struct Frame {
        int state = -1;
        int unit_id = -1;
        int state_in_unit = 0;
        bool in_keyword = false;
    };
    std::vector<Frame> frames;

    /// Unit labels along the path, consecutive frames of one instance merged.
    std::vector<std::string> unit_sequence(const CompositeNetwork& net) const {
        std::vector<std::string> out;
        int prev = -1;
        for (const auto& f : frames) {
            if (f.unit_id != prev) out.push_back(net.unit_labels[size_t(f.unit_id)]);
            prev = f.unit_id;
        }
        return out;
    }
};

/// Max-probability path through the network. Ties break toward the lowest
/// predecessor/state index. Returns nullopt when no complete path exists.
inline std::optional<Alignment> viterbi(const CompositeNetwork& net, const FeatureSequence& seq) {
    if (seq.count == 0) throw std::invalid_argument("viterbi: empty sequence");
    const int S = net.num_states();
    const int T = seq.count;
    for (const auto& s : net.states)
        if (s.em->dim != seq.dim) throw std::invalid_argument("viterbi: feature dimension mismatch");

    // Deduplicate shared emissions for the per-frame cache.
    std::vector<const GmmEmission*> uniq;
    std::vector<int> em_index(static_cast<size_t>(S));
    {
        std::map<const GmmEmission*, int> seen;
        for (int s = 0; s < S; ++s) {
            auto [it, inserted] = seen.insert({net.states[size_t(s)].em, int(uniq.size())});
            if (inserted) uniq.push_back(net.states[size_t(s)].em);
            em_index[size_t(s)] = it->second;
        }
    }

    std::vector<double> em_cache(uniq.size());
    auto fill_cache = [&](int t) {
        auto x = seq.frame(t);
        for (size_t i = 0; i < uniq.size(); ++i) em_cache[i] = gmm_log_density(*uniq[i], x);
    };

    std::vector<double> prev(size_t(S), kLogZero), cur(size_t(S), kLogZero);
    std::vector<std::vector<int>> back(size_t(T), std::vector<int>(size_t(S), -1));

    fill_cache(0);
    for (auto [s, lp] : net.entries) {
        double v = lp + em_cache[size_t(em_index[size_t(s)])];
        if (v > prev[size_t(s)]) prev[size_t(s)] = v;
    }

    for (int t = 1; t < T; ++t) {
        fill_cache(t);
        for (int s = 0; s < S; ++s) {
            double best = kLogZero;
            int best_from = -1;
            for (auto [from, lp] : net.in_edges[size_t(s)]) {
                if (prev[size_t(from)] == kLogZero) continue;
                double v = prev[size_t(from)] + lp;
                if (v > best) {
                    best = v;
                    best_from = from;
                }
            }
            // Self-loop last so that ties prefer the lowest state index among
            // sorted predecessors, then the self transition.
            if (prev[size_t(s)] != kLogZero) {
                double v = prev[size_t(s)] + net.states[size_t(s)].log_self;
                if (v > best) {
                    best = v;
                    best_from = s;
                }
            }
            if (best == kLogZero) {
                cur[size_t(s)] = kLogZero;
                continue;
            }
            cur[size_t(s)] = best + em_cache[size_t(em_index[size_t(s)])];
            back[size_t(t)][size_t(s)] = best_from;
        }
        std::swap(prev, cur);
    }

    double best = kLogZero;
    int best_state = -1;
    for (int s = 0; s < S; ++s) {
        if (prev[size_t(s)] == kLogZero || net.exit_logp[size_t(s)] == kLogZero) continue;
        double v = prev[size_t(s)] + net.exit_logp[size_t(s)];
        if (v > best) {
            best = v;
            best_state = s;
        }
    }
    if (best_state < 0) return std::nullopt;

    Alignment a;
    a.log_likelihood = best;
    a.frames.resize(size_t(T));
    int s = best_state;
    for (int t = T - 1; t >= 0; --t) {
        const auto& st = net.states[size_t(s)];
        a.frames[size_t(t)] = {s, st.unit_id, st.state_in_unit, st.in_keyword};
        if (t > 0) s = back[size_t(t)][size_t(s)];
    }
    return a;
}

/// Viterbi through the linear concatenation of the transcript's models.
inline Alignment forced_align(const ModelSet& models, const std::vector<std::string>& transcript,
                              const FeatureSequence& seq) {
    CompositeNetwork net = build_transcript_network(transcript, models);
    auto a = viterbi(net, seq);
    if (!a) throw std::runtime_error("forced_align: sequence shorter than the transcript's minimum path");
    return *a;
}

// ---------------------------------------------------------------------------
// Embedded training
// ---------------------------------------------------------------------------

struct TrainConfig {
    int states_letters = 6;
    int states_punct = 3;  // punctuation, space and comma units are narrow
    int max_gaussians = 32;
    int max_iterations = 10;
    double tol = 1e-4;           // relative log-likelihood change per frame
    double variance_floor = 1e-4;
    double split_perturb = 0.2;  // mean offset in units of sigma when splitting
    enum class Mode { ViterbiAlign, ForwardBackward } mode = Mode::ViterbiAlign;

    int states_for(const std::string& symbol) const {
        if (symbol == "/" || symbol == "-" || symbol == "." || symbol == "," || symbol == " ")
            return states_punct;
        return states_letters;
    }
};

struct TrainingLine {
    const FeatureSequence* seq = nullptr;
    std::vector<std::string> labels;
};

struct TrainStats {
    // Total training log-likelihood after each EM iteration, per mixture size.
    std::vector<std::pair<int, std::vector<double>>> loglik_per_gaussians;
    std::vector<std::string> warnings;
};

namespace detail {

struct StateAccum {
    double occupancy = 0.0;
    double self_count = 0.0;
    double adv_count = 0.0;
    std::vector<double> comp_occ;       // per component
    std::vector<std::vector<double>> comp_sum;
    std::vector<std::vector<double>> comp_sq;

    void init(int comps, int dim) {
        occupancy = self_count = adv_count = 0.0;
        comp_occ.assign(size_t(comps), 0.0);
        comp_sum.assign(size_t(comps), std::vector<double>(size_t(dim), 0.0));
        comp_sq.assign(size_t(comps), std::vector<double>(size_t(dim), 0.0));
    }

    void add_frame(const GmmEmission& em, std::span<const float> x, double weight) {
        occupancy += weight;
        // Component responsibilities within the state.
        size_t K = em.comps.size();
        if (K == 1) {
            accumulate(0, x, weight);
            return;
        }
        std::vector<double> lp(K);
        double tot = kLogZero;
        for (size_t k = 0; k < K; ++k) {
            lp[k] = em.component_log_density(k, x);
            tot = log_sum_exp(tot, lp[k]);
        }
        for (size_t k = 0; k < K; ++k) accumulate(k, x, weight * std::exp(lp[k] - tot));
    }

    void accumulate(size_t k, std::span<const float> x, double w) {
        comp_occ[k] += w;
        auto& s = comp_sum[k];
        auto& q = comp_sq[k];
        for (size_t d = 0; d < x.size(); ++d) {
            double v = x[d];
            s[d] += w * v;
            q[d] += w * v * v;
        }
    }
};

/// Linear chain view of a transcript: one entry per (unit occurrence, state).
struct Chain {
    std::vector<const GmmEmission*> em;
    std::vector<double> log_self, log_adv;
    std::vector<std::pair<std::string, int>> key;  // (symbol, state index)
};

inline Chain build_chain(const std::vector<std::string>& labels, const ModelSet& models) {
    Chain c;
    for (const auto& label : labels) {
        const CharacterHmm& m = models.at(label);
        for (int j = 0; j < m.num_states; ++j) {
            c.em.push_back(&m.states[size_t(j)]);
            c.log_self.push_back(m.log_self[size_t(j)]);
            c.log_adv.push_back(m.log_next[size_t(j)]);
            c.key.push_back({label, j});
        }
    }
    return c;
}

/// Full forward-backward over a left-to-right chain. Returns the total data
/// log-likelihood and fills per-position state/transition expectations.
inline double chain_forward_backward(const Chain& chain, const FeatureSequence& seq,
                                     std::map<std::pair<std::string, int>, StateAccum>& accum) {
    const int N = int(chain.em.size());
    const int T = seq.count;
    if (T < 1 || N < 1) throw std::invalid_argument("empty chain or sequence");

    std::vector<std::vector<double>> emit(static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(N)));
    for (int t = 0; t < T; ++t) {
        auto x = seq.frame(t);
        for (int i = 0; i < N; ++i) emit[size_t(t)][size_t(i)] = gmm_log_density(*chain.em[size_t(i)], x);
    }

    auto idx = [N](int t, int i) { return size_t(t) * size_t(N) + size_t(i); };
    std::vector<double> alpha(size_t(T) * size_t(N), kLogZero);
    std::vector<double> beta(size_t(T) * size_t(N), kLogZero);

    alpha[idx(0, 0)] = emit[0][0];
    for (int t = 1; t < T; ++t)
        for (int i = 0; i < N; ++i) {
            double v = alpha[idx(t - 1, i)] + chain.log_self[size_t(i)];
            if (i > 0)
                v = log_sum_exp(v, alpha[idx(t - 1, i - 1)] + chain.log_adv[size_t(i - 1)]);
            alpha[idx(t, i)] = v == kLogZero ? kLogZero : v + emit[size_t(t)][size_t(i)];
        }
    double total = alpha[idx(T - 1, N - 1)] + chain.log_adv[size_t(N - 1)];
    if (total == kLogZero) throw std::runtime_error("forward-backward: no admissible path");

    beta[idx(T - 1, N - 1)] = chain.log_adv[size_t(N - 1)];
    for (int t = T - 2; t >= 0; --t)
        for (int i = N - 1; i >= 0; --i) {
            double v = chain.log_self[size_t(i)] + emit[size_t(t + 1)][size_t(i)] +
                       beta[idx(t + 1, i)];
            if (i + 1 < N)
                v = log_sum_exp(v, chain.log_adv[size_t(i)] + emit[size_t(t + 1)][size_t(i + 1)] +
                                       beta[idx(t + 1, i + 1)]);
            beta[idx(t, i)] = v;
        }

    for (int t = 0; t < T; ++t) {
        auto x = seq.frame(t);
        for (int i = 0; i < N; ++i) {
            if (alpha[idx(t, i)] == kLogZero) continue;
            double gamma = std::exp(alpha[idx(t, i)] + beta[idx(t, i)] - total);
            if (gamma <= 0.0) continue;
            auto& acc = accum[chain.key[size_t(i)]];
            if (acc.comp_occ.empty())
                acc.init(int(chain.em[size_t(i)]->comps.size()), chain.em[size_t(i)]->dim);
            acc.add_frame(*chain.em[size_t(i)], x, gamma);
            if (t + 1 < T) {
                double self_xi = std::exp(alpha[idx(t, i)] + chain.log_self[size_t(i)] +
                                          emit[size_t(t + 1)][size_t(i)] + beta[idx(t + 1, i)] -
                                          total);
                acc.self_count += self_xi;
                if (i + 1 < N) {
                    double adv_xi = std::exp(alpha[idx(t, i)] + chain.log_adv[size_t(i)] +
                                             emit[size_t(t + 1)][size_t(i + 1)] +
                                             beta[idx(t + 1, i + 1)] - total);
                    acc.adv_count += adv_xi;
                }
            } else {
                acc.adv_count += gamma;  // exit transition
            }
        }
    }
    return total;
}

/// Viterbi alignment accumulation over the same chain.
inline double chain_viterbi_accumulate(const Chain& chain, const FeatureSequence& seq,
                                       std::map<std::pair<std::string, int>, StateAccum>& accum) {
    const int N = int(chain.em.size());
    const int T = seq.count;
    std::vector<std::vector<double>> emit(static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(N)));
    for (int t = 0; t < T; ++t) {
        auto x = seq.frame(t);
        for (int i = 0; i < N; ++i) emit[size_t(t)][size_t(i)] = gmm_log_density(*chain.em[size_t(i)], x);
    }
    std::vector<std::vector<double>> delta(size_t(T), std::vector<double>(size_t(N), kLogZero));
    std::vector<std::vector<int8_t>> self_move(size_t(T), std::vector<int8_t>(size_t(N), 0));
    delta[0][0] = emit[0][0];
    for (int t = 1; t < T; ++t)
        for (int i = 0; i < N; ++i) {
            double stay = delta[size_t(t - 1)][size_t(i)] == kLogZero
                              ? kLogZero
                              : delta[size_t(t - 1)][size_t(i)] + chain.log_self[size_t(i)];
            double adv = (i > 0 && delta[size_t(t - 1)][size_t(i - 1)] != kLogZero)
                             ? delta[size_t(t - 1)][size_t(i - 1)] + chain.log_adv[size_t(i - 1)]
                             : kLogZero;
            if (adv == kLogZero && stay == kLogZero) continue;
            if (adv > stay) {
                delta[size_t(t)][size_t(i)] = adv + emit[size_t(t)][size_t(i)];
                self_move[size_t(t)][size_t(i)] = 0;
            } else {
                delta[size_t(t)][size_t(i)] = stay + emit[size_t(t)][size_t(i)];
                self_move[size_t(t)][size_t(i)] = 1;
            }
        }
    double total = delta[size_t(T - 1)][size_t(N - 1)];
    if (total == kLogZero) throw std::runtime_error("viterbi training: sequence too short for transcript");
    total += chain.log_adv[size_t(N - 1)];

    int i = N - 1;
    std::vector<int> path(static_cast<size_t>(T));
    for (int t = T - 1; t >= 0; --t) {
        path[size_t(t)] = i;
        if (t > 0 && self_move[size_t(t)][size_t(i)] == 0) --i;
    }
    for (int t = 0; t < T; ++t) {
        int p = path[size_t(t)];
        auto& acc = accum[chain.key[size_t(p)]];
        if (acc.comp_occ.empty())
            acc.init(int(chain.em[size_t(p)]->comps.size()), chain.em[size_t(p)]->dim);
        acc.add_frame(*chain.em[size_t(p)], seq.frame(t), 1.0);
        if (t + 1 < T) {
            if (path[size_t(t + 1)] == p)
                acc.self_count += 1.0;
            else
                acc.adv_count += 1.0;
        } else {
            acc.adv_count += 1.0;
        }
    }
    return total;
}

inline void reestimate(ModelSet& models,
                       const std::map<std::pair<std::string, int>, StateAccum>& accum,
                       const TrainConfig& cfg) {
    for (auto& [sym, m] : models) {
        for (int j = 0; j < m.num_states; ++j) {
            auto it = accum.find({sym, j});
            if (it == accum.end() || it->second.occupancy <= 1e-10) continue;
            const StateAccum& acc = it->second;
            GmmEmission& em = m.states[size_t(j)];
            double total_occ = 0.0;
            for (double o : acc.comp_occ) total_occ += o;
            for (size_t k = 0; k < em.comps.size(); ++k) {
                double occ = acc.comp_occ[k];
                if (occ <= 1e-8) continue;  // starving component keeps old params
                auto& comp = em.comps[k];
                comp.weight = std::max(1e-8, occ / total_occ);
                for (int d = 0; d < em.dim; ++d) {
                    double mean = acc.comp_sum[k][size_t(d)] / occ;
                    double var = acc.comp_sq[k][size_t(d)] / occ - mean * mean;
                    comp.mean[size_t(d)] = mean;
                    comp.var[size_t(d)] = std::max(cfg.variance_floor, var);
                }
            }
            // Renormalize weights.
            double wsum = 0.0;
            for (const auto& c : em.comps) wsum += c.weight;
            for (auto& c : em.comps) c.weight /= wsum;
            em.invalidate_cache();

            double trans_total = acc.self_count + acc.adv_count;
            if (trans_total > 1e-10) {
                double self = std::clamp(acc.self_count / trans_total, 1e-6, 1.0 - 1e-6);
                m.log_self[size_t(j)] = std::log(self);
                m.log_next[size_t(j)] = std::log(1.0 - self);
            }
        }
    }
}

inline void split_mixtures(ModelSet& models, double perturb) {
    for (auto& [sym, m] : models)
        for (auto& em : m.states) {
            std::vector<GmmComponent> next;
            next.reserve(em.comps.size() * 2);
            for (const auto& c : em.comps) {
                GmmComponent a = c, b = c;
                a.weight = b.weight = c.weight * 0.5;
                for (int d = 0; d < em.dim; ++d) {
                    double off = perturb * std::sqrt(c.var[size_t(d)]);
                    a.mean[size_t(d)] += off;
                    b.mean[size_t(d)] -= off;
                }
                next.push_back(std::move(a));
                next.push_back(std::move(b));
            }
            em.comps = std::move(next);
            em.invalidate_cache();
        }
}

}  // namespace detail

/// Embedded training: flat start from global statistics, EM to convergence
/// at each mixture size, doubling components up to cfg.max_gaussians.
inline ModelSet train_embedded(const std::vector<TrainingLine>& lines, const Alphabet& alphabet,
                               const TrainConfig& cfg, TrainStats* stats = nullptr) {
    if (lines.empty()) throw std::invalid_argument("train_embedded: no training lines");
    const int dim = lines.front().seq->dim;
    size_t total_frames = 0;

    // Global statistics for the flat start.
    std::vector<double> gsum(size_t(dim), 0.0), gsq(size_t(dim), 0.0);
    for (const auto& line : lines) {
        if (line.seq->dim != dim)
            throw std::invalid_argument("train_embedded: inconsistent feature dimensions");
        for (int t = 0; t < line.seq->count; ++t) {
            auto x = line.seq->frame(t);
            for (int d = 0; d < dim; ++d) {
                gsum[size_t(d)] += x[size_t(d)];
                gsq[size_t(d)] += double(x[size_t(d)]) * x[size_t(d)];
            }
        }
        total_frames += size_t(line.seq->count);
    }
    std::vector<double> gmean(static_cast<size_t>(dim)), gvar(static_cast<size_t>(dim));
    for (int d = 0; d < dim; ++d) {
        gmean[size_t(d)] = gsum[size_t(d)] / double(total_frames);
        gvar[size_t(d)] = std::max(cfg.variance_floor,
                                   gsq[size_t(d)] / double(total_frames) -
                                       gmean[size_t(d)] * gmean[size_t(d)]);
    }

    ModelSet models;
    std::map<std::string, size_t> occurrences;
    for (const auto& line : lines)
        for (const auto& label : line.labels) ++occurrences[label];
    for (const auto& sym : alphabet.symbols()) {
        models[sym] = make_flat_character(sym, cfg.states_for(sym), dim, gmean, gvar);
        if (stats && occurrences[sym] == 0)
            stats->warnings.push_back("symbol '" + sym + "' has no training occurrences; left at flat start");
    }
    for (const auto& line : lines)
        for (const auto& label : line.labels)
            if (!alphabet.contains(label))
                throw std::runtime_error("transcript symbol '" + label + "' not in alphabet");

    int gaussians = 1;
    while (true) {
        std::vector<double> logliks;
        double prev_ll = kLogZero;
        for (int iter = 0; iter < cfg.max_iterations; ++iter) {
            std::map<std::pair<std::string, int>, detail::StateAccum> accum;
            double total_ll = 0.0;
            for (const auto& line : lines) {
                detail::Chain chain = detail::build_chain(line.labels, models);
                if (cfg.mode == TrainConfig::Mode::ForwardBackward)
                    total_ll += detail::chain_forward_backward(chain, *line.seq, accum);
                else
                    total_ll += detail::chain_viterbi_accumulate(chain, *line.seq, accum);
            }
            if (!std::isfinite(total_ll))
                throw std::runtime_error("train_embedded: non-finite log-likelihood");
            logliks.push_back(total_ll);
            detail::reestimate(models, accum, cfg);
            if (prev_ll != kLogZero &&
                std::abs(total_ll - prev_ll) / double(total_frames) < cfg.tol)
                break;
            prev_ll = total_ll;
        }
        if (stats) stats->loglik_per_gaussians.push_back({gaussians, logliks});
        if (gaussians >= cfg.max_gaussians) break;
        detail::split_mixtures(models, cfg.split_perturb);
        gaussians *= 2;
    }
    return models;
}

}  // namespace datespot

#endif

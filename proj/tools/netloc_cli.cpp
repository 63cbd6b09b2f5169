// Copyright 2026 The netloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// netloc command-line driver.
//
// Exit codes: 0 success, 1 domain error or bad usage, 2 I/O error.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "netloc/bell.hpp"
#include "netloc/common.hpp"
#include "netloc/distribution.hpp"
#include "netloc/local_model.hpp"
#include "netloc/rbbbgb.hpp"
#include "netloc/square.hpp"
#include "netloc/triangle.hpp"

using json = nlohmann::ordered_json;
using namespace netloc;

namespace {

struct Common {
    std::string out;
    bool deterministic = false;
    std::size_t threads = 0;
};

/// start:stop:count (inclusive linspace), a comma list, or a single value.
std::vector<double> parse_grid(const std::string& text, const std::string& what) {
    auto number = [&](const std::string& s) {
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw DomainError(what + ": cannot parse '" + s + "' as a number");
        return v;
    };
    std::vector<std::string> parts;
    if (text.find(':') != std::string::npos) {
        std::stringstream ss(text);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw DomainError(what + ": grid must be start:stop:count, got '" + text + "'");
        const double a = number(parts[0]), b = number(parts[1]);
        std::size_t n = 0;
        auto res = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), n);
        if (res.ec != std::errc{} || res.ptr != parts[2].data() + parts[2].size() || n == 0)
            throw DomainError(what + ": grid count must be a positive integer, got '" + parts[2] + "'");
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        if (n > 1) g.back() = b;
        return g;
    }
    std::vector<double> g;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) g.push_back(number(p));
    if (g.empty()) throw DomainError(what + ": empty grid");
    return g;
}

std::vector<std::size_t> parse_cards(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) {
        std::size_t n = 0;
        auto res = std::from_chars(p.data(), p.data() + p.size(), n);
        if (res.ec != std::errc{} || res.ptr != p.data() + p.size()) throw DomainError("cannot parse cardinality '" + p + "'");
        out.push_back(n);
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed on '" + path + "'");
    return ss.str();
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw IoError("malformed JSON in '" + path + "': " + e.what());
    }
}

JointDistribution read_distribution(const std::string& path) {
    auto j = read_json(path);
    if (j.is_object() && j.contains("distribution")) return distribution_from_json(j.at("distribution"));
    return distribution_from_json(j);
}

models::EpsilonLocalModel read_model(const std::string& path) {
    auto j = read_json(path);
    if (j.is_object() && j.contains("model")) return models::model_from_json(j.at("model"));
    return models::model_from_json(j);
}

void write_output(const Common& c, const std::string& text) {
    if (c.out.empty() || c.out == "-") {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) throw IoError("write to stdout failed");
        return;
    }
    std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + c.out + "' for writing");
    f << text;
    f.close();
    if (!f) throw IoError("write failed on '" + c.out + "'");
}

std::string timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Ordered key/value metadata shared by the JSON and CSV writers.
class Metadata {
public:
    Metadata(const Common& c, std::string command) : common_(c) {
        add("tool", "netloc");
        add("version", kVersion);
        add("command", std::move(command));
    }
    void add(const std::string& k, const std::string& v) { items_.emplace_back(k, v); }
    void add(const std::string& k, double v) { items_.emplace_back(k, format_double(v)); }

    json to_json() const {
        json j = json::object();
        for (const auto& [k, v] : items_) j[k] = v;
        if (!common_.deterministic) j["timestamp"] = timestamp();
        return j;
    }

    std::string csv_header() const {
        std::string s;
        for (const auto& [k, v] : items_) s += "# " + k + ": " + v + "\n";
        if (!common_.deterministic) s += "# timestamp: " + timestamp() + "\n";
        return s;
    }

private:
    const Common& common_;
    std::vector<std::pair<std::string, std::string>> items_;
};

void emit_json(const Common& c, const Metadata& meta, json body) {
    json j = json::object();
    j["metadata"] = meta.to_json();
    for (auto& [k, v] : body.items()) j[k] = v;
    write_output(c, j.dump(2) + "\n");
}


json certificate_json(const bell::CertificateResult& r) {
    json m = json::object();
    for (const auto& nm : r.marginals) m[nm.variable] = nm.probs;
    json j = {{"lhs", r.lhs}, {"bound", r.bound}, {"margin", r.margin}, {"violated", r.violated}, {"xi1", r.xi1}, {"xi2", r.xi2}, {"marginals", m}};
    if (r.eps) {
        j["eps1"] = r.eps->eps1;
        j["eps2"] = r.eps->eps2;
    }
    return j;
}

std::string csv_bool(bool b) { return b ? "true" : "false"; }

std::string join_csv(std::initializer_list<std::string> fields) {
    std::string s;
    bool first = true;
    for (const auto& f : fields) {
        if (!first) s += ",";
        s += f;
        first = false;
    }
    return s + "\n";
}

/// Flat `key = value` config (TOML subset, one flag per line, '#' comments)
/// turned into command-line tokens. `true` becomes a bare flag, `false` is dropped.
std::vector<std::string> config_tokens(const std::string& path) {
    std::vector<std::string> out;
    std::stringstream in(read_file(path));
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DomainError("config '" + path + "' line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) value = value.substr(1, value.size() - 2);
        if (key.empty() || key.starts_with("-")) throw DomainError("config '" + path + "' line " + std::to_string(lineno) + ": bad key '" + key + "'");
        std::replace(key.begin(), key.end(), '_', '-');
        if (value == "true") {
            out.push_back("--" + key);
        } else if (value != "false") {
            out.push_back("--" + key);
            out.push_back(value);
        }
    }
    return out;
}

/// Moves `--config FILE` out of argv and splices the file's flags in after the
/// command path, so explicit flags (later on the line) take precedence.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc), rest;
    std::optional<std::string> config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw DomainError("--config needs a file name");
            config = args[++i];
        } else if (args[i].starts_with("--config=")) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!config) return rest;
    std::size_t path_end = 0;
    while (path_end < rest.size() && !rest[path_end].starts_with("-")) ++path_end;
    auto extra = config_tokens(*config);
    rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(path_end), extra.begin(), extra.end());
    return rest;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netloc: network Bell nonlocality with partially independent sources", "netloc"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Common common;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", common.out, "Output file (default stdout)");
        cmd->add_flag("--deterministic", common.deterministic, "Omit the timestamp so reruns are byte-identical");
        cmd->add_option("--threads", common.threads, "Worker threads (0: NETLOC_THREADS or hardware)");
        cmd->add_option("--config", "Flat key = value file with the same names as the flags");
    };

    std::function<void()> action;

    // ---- triangle ----
    auto* tri = app.add_subcommand("triangle", "Hardy-type triangle family");
    tri->require_subcommand(1);
    std::string t_theta = "0.7853981633974483", t_conv = "hardy", t_eps1 = "1", t_eps2 = "1";
    bool t_extended = false;
    auto tri_common = [&](CLI::App* cmd) {
        add_common(cmd);
        cmd->add_option("--convention", t_conv, "hardy or paper-verbatim")->capture_default_str();
        cmd->add_flag("--extended", t_extended, "Allow theta in (pi/4, pi/2]");
    };
    auto triangle_params = [&]() {
        return triangle::TriangleParams{parse_grid(t_theta, "theta").at(0), triangle::convention_from_string(t_conv), t_extended};
    };

    auto* tri_dist = tri->add_subcommand("dist", "Joint distribution over a_B, a_C, b_A, b_C, c_A, c_B");
    tri_common(tri_dist);
    tri_dist->add_option("--theta", t_theta, "Angle in radians")->capture_default_str();
    tri_dist->callback([&] {
        action = [&] {
            auto p = triangle_params();
            Metadata meta(common, "triangle dist");
            meta.add("convention", triangle::to_string(p.convention));
            meta.add("theta", p.theta);
            emit_json(common, meta, {{"distribution", to_json(triangle::triangle_distribution(p))}});
        };
    });

    auto* tri_hardy = tri->add_subcommand("hardy", "Hardy positive and zero events");
    tri_common(tri_hardy);
    tri_hardy->add_option("--theta", t_theta, "Angle in radians")->capture_default_str();
    tri_hardy->callback([&] {
        action = [&] {
            auto p = triangle_params();
            auto h = triangle::hardy_check(p);
            Metadata meta(common, "triangle hardy");
            meta.add("convention", triangle::to_string(p.convention));
            meta.add("theta", p.theta);
            emit_json(common, meta,
                      {{"p_positive", h.p_positive},
                       {"p_zero", h.p_zero},
                       {"zero_events", {"a_B=0,b_A=1,a_C=0,b_C=1", "a_B=1,b_A=0,a_C=1,b_C=0", "a_B=0,b_A=0,a_C=1,b_C=1"}},
                       {"pass", h.pass},
                       {"tolerance", h.tolerance}});
        };
    });

    auto* tri_cert = tri->add_subcommand("certify", "Source-dependent lifted certificate");
    tri_common(tri_cert);
    tri_cert->add_option("--theta", t_theta, "Angle in radians")->capture_default_str();
    tri_cert->add_option("--eps1", t_eps1, "eps1 in [0, 1]")->capture_default_str();
    tri_cert->add_option("--eps2", t_eps2, "eps2 >= 1")->capture_default_str();
    tri_cert->callback([&] {
        action = [&] {
            auto p = triangle_params();
            bell::EpsilonPair eps{parse_grid(t_eps1, "eps1").at(0), parse_grid(t_eps2, "eps2").at(0)};
            auto r = triangle::certify(p, eps);
            Metadata meta(common, "triangle certify");
            meta.add("convention", triangle::to_string(p.convention));
            meta.add("theta", p.theta);
            auto body = certificate_json(r);
            body["theta"] = p.theta;
            emit_json(common, meta, body);
        };
    });

    auto* tri_scan = tri->add_subcommand("scan", "Certificate over a (theta, eps1, eps2) grid, CSV");
    tri_common(tri_scan);
    std::string s_theta = "0:0.7853981633974483:9", s_eps1 = "1", s_eps2 = "1";
    tri_scan->add_option("--theta", s_theta, "Grid start:stop:count")->capture_default_str();
    tri_scan->add_option("--eps1", s_eps1, "Grid start:stop:count")->capture_default_str();
    tri_scan->add_option("--eps2", s_eps2, "Grid start:stop:count")->capture_default_str();
    tri_scan->callback([&] {
        action = [&] {
            auto conv = triangle::convention_from_string(t_conv);
            auto th = parse_grid(s_theta, "theta"), e1 = parse_grid(s_eps1, "eps1"), e2 = parse_grid(s_eps2, "eps2");
            auto rows = triangle::scan(th, e1, e2, conv, t_extended, common.threads);
            Metadata meta(common, "triangle scan");
            meta.add("convention", triangle::to_string(conv));
            meta.add("grid", "theta=" + s_theta + " eps1=" + s_eps1 + " eps2=" + s_eps2);
            std::string text = meta.csv_header() + "theta,eps1,eps2,xi1,xi2,lhs,violated\n";
            for (const auto& r : rows)
                text += join_csv({format_double(r.theta), format_double(r.result.eps->eps1), format_double(r.result.eps->eps2), format_double(r.result.xi1),
                                  format_double(r.result.xi2), format_double(r.result.lhs), csv_bool(r.result.violated)});
            write_output(common, text);
        };
    });

    // ---- rbbbgb ----
    auto* rb = app.add_subcommand("rbbbgb", "Parametric entangled-measurement triangle distribution");
    rb->require_subcommand(1);
    std::string r_u = "0.8", r_s0 = "0.8", r_eps1 = "1", r_eps2 = "1";
    bool r_coarse = false;

    auto* rb_dist = rb->add_subcommand("dist", "Joint distribution over a, b, c");
    add_common(rb_dist);
    rb_dist->add_option("--u", r_u, "u in (0, 1)")->capture_default_str();
    rb_dist->add_option("--s0", r_s0, "s0 in (0, 1)")->capture_default_str();
    rb_dist->add_flag("--coarse", r_coarse, "Merge chi0 and chi1 into chi");
    rb_dist->callback([&] {
        action = [&] {
            rbbbgb::RbbbgbParams p{parse_grid(r_u, "u").at(0), parse_grid(r_s0, "s0").at(0)};
            auto d = rbbbgb::rbbbgb_distribution(p);
            if (r_coarse) d = rbbbgb::coarse_grain(d);
            Metadata meta(common, "rbbbgb dist");
            meta.add("u", p.u);
            meta.add("s0", p.s0);
            emit_json(common, meta, {{"distribution", to_json(d)}});
        };
    });

    auto* rb_region = rb->add_subcommand("region", "Region inequality over a (u, s0, eps1, eps2) grid, CSV");
    add_common(rb_region);
    rb_region->add_option("--u", r_u, "Grid start:stop:count")->capture_default_str();
    rb_region->add_option("--s0", r_s0, "Grid start:stop:count")->capture_default_str();
    rb_region->add_option("--eps1", r_eps1, "Grid start:stop:count")->capture_default_str();
    rb_region->add_option("--eps2", r_eps2, "Grid start:stop:count")->capture_default_str();
    rb_region->callback([&] {
        action = [&] {
            auto us = parse_grid(r_u, "u"), s0s = parse_grid(r_s0, "s0"), e1 = parse_grid(r_eps1, "eps1"), e2 = parse_grid(r_eps2, "eps2");
            auto rows = rbbbgb::region_scan(us, s0s, e1, e2, common.threads);
            Metadata meta(common, "rbbbgb region");
            meta.add("grid", "u=" + r_u + " s0=" + r_s0 + " eps1=" + r_eps1 + " eps2=" + r_eps2);
            std::string text = meta.csv_header() + "u,s0,eps1,eps2,lhs,rhs,nonlocal\n";
            for (const auto& r : rows)
                text += join_csv({format_double(r.u), format_double(r.s0), format_double(r.eps1), format_double(r.eps2), format_double(r.result.lhs),
                                  format_double(r.result.rhs), csv_bool(r.result.nonlocal)});
            write_output(common, text);
        };
    });

    // ---- square ----
    auto* sq = app.add_subcommand("square", "Square network with entanglement swapping");
    sq->require_subcommand(1);
    std::string q_mapping, q_dist, q_eps1 = "1", q_eps2 = "1";

    auto square_mapping = [&]() {
        if (q_mapping.empty()) return square::kCalibratedMapping;
        auto v = parse_cards(q_mapping);
        if (v.size() != 4) throw DomainError("--mapping needs four comma-separated values");
        square::BsmMapping m{{v[0], v[1], v[2], v[3]}};
        m.validate();
        return m;
    };
    auto mapping_text = [](const square::BsmMapping& m) {
        std::string s;
        for (std::size_t i = 0; i < 4; ++i) s += (i ? "," : "") + std::to_string(m.bits[i]);
        return s;
    };

    auto* sq_dist = sq->add_subcommand("dist", "Joint distribution of the four parties");
    add_common(sq_dist);
    sq_dist->add_option("--mapping", q_mapping, "BSM outcome bits for Phi+,Phi-,Psi+,Psi- (default calibrated)");
    sq_dist->callback([&] {
        action = [&] {
            auto m = square_mapping();
            auto d = square::square_distribution(m);
            auto v = square::bilocality_value(d);
            Metadata meta(common, "square dist");
            meta.add("mapping", mapping_text(m));
            emit_json(common, meta, {{"distribution", to_json(d)}, {"I14", v.I14}, {"J14", v.J14}, {"value", v.value}});
        };
    });

    auto* sq_cert = sq->add_subcommand("certify", "Source-dependent bilocality certificate over an (eps1, eps2) grid, CSV");
    add_common(sq_cert);
    sq_cert->add_option("--mapping", q_mapping, "BSM outcome bits (default calibrated)");
    sq_cert->add_option("--dist", q_dist, "Certify this distribution JSON instead of the quantum strategy");
    sq_cert->add_option("--eps1", q_eps1, "Grid start:stop:count")->capture_default_str();
    sq_cert->add_option("--eps2", q_eps2, "Grid start:stop:count")->capture_default_str();
    sq_cert->callback([&] {
        action = [&] {
            Metadata meta(common, "square certify");
            std::optional<JointDistribution> d;
            if (!q_dist.empty()) {
                d = read_distribution(q_dist);
                meta.add("source", q_dist);
            } else {
                auto m = square_mapping();
                d = square::square_distribution(m);
                meta.add("mapping", mapping_text(m));
            }
            auto e1 = parse_grid(q_eps1, "eps1"), e2 = parse_grid(q_eps2, "eps2");
            meta.add("grid", "eps1=" + q_eps1 + " eps2=" + q_eps2);
            std::vector<square::SquareCertificate> certs(e1.size() * e2.size());
            parallel_for(certs.size(), common.threads, [&](std::size_t k) { certs[k] = square::square_certify(*d, {e1[k / e2.size()], e2[k % e2.size()]}); });
            std::string text = meta.csv_header() + "eps1,eps2,xi1,xi2,I14,J14,lhs,bound,violated\n";
            for (const auto& c : certs)
                text += join_csv({format_double(c.params.eps1), format_double(c.params.eps2), format_double(c.cert.xi1), format_double(c.cert.xi2),
                                  format_double(c.correlators.I14), format_double(c.correlators.J14), format_double(c.cert.lhs),
                                  format_double(c.cert.bound), csv_bool(c.cert.violated)});
            write_output(common, text);
        };
    });

    auto* sq_brute = sq->add_subcommand("brute", "Bilocal deterministic-model maximum of sqrt|I14| + sqrt|J14|");
    add_common(sq_brute);
    std::size_t b_delta = 2, b_alpha = 2, b_steps = 12;
    sq_brute->add_option("--card-delta", b_delta, "Cardinality of the A-B source")->capture_default_str();
    sq_brute->add_option("--card-alpha", b_alpha, "Cardinality of the B-C source")->capture_default_str();
    sq_brute->add_option("--grid-steps", b_steps, "Simplex grid resolution for source weights")->capture_default_str();
    sq_brute->callback([&] {
        action = [&] {
            double v = square::bilocal_brute_force_bound(b_delta, b_alpha, {b_steps, common.threads});
            Metadata meta(common, "square brute");
            meta.add("card_delta", static_cast<double>(b_delta));
            meta.add("card_alpha", static_cast<double>(b_alpha));
            meta.add("grid_steps", static_cast<double>(b_steps));
            emit_json(common, meta, {{"max_value", v}, {"bound", 1.0}});
        };
    });

    // ---- model ----
    auto* mo = app.add_subcommand("model", "Central-lambda local models");
    mo->require_subcommand(1);
    std::string m_target, m_model, m_wiring = "triangle", m_cards;
    double m_eps1 = 0.5, m_stop = 1e-10;
    std::size_t m_lambda = 4, m_restarts = 32, m_iters = 1500;
    std::uint64_t m_seed = 0;

    auto* mo_search = mo->add_subcommand("search", "Multistart search for an eps1-feasible model (falsifier, not a proof)");
    add_common(mo_search);
    mo_search->add_option("--target", m_target, "Target distribution JSON")->required();
    mo_search->add_option("--wiring", m_wiring, "triangle or square")->capture_default_str();
    mo_search->add_option("--eps1", m_eps1, "Floor eps1 in [0, 1]")->capture_default_str();
    mo_search->add_option("--cards", m_cards, "Source cardinalities, comma separated (default 4 each)");
    mo_search->add_option("--lambda-card", m_lambda, "Cardinality of lambda")->capture_default_str();
    mo_search->add_option("--restarts", m_restarts, "Number of restarts")->capture_default_str();
    mo_search->add_option("--iterations", m_iters, "LM iterations per restart")->capture_default_str();
    mo_search->add_option("--stop-tv", m_stop, "Early stop threshold")->capture_default_str();
    mo_search->add_option("--seed", m_seed, "Seed")->capture_default_str();
    mo_search->callback([&] {
        action = [&] {
            auto target = read_distribution(m_target);
            models::NetworkWiring w;
            if (m_wiring == "triangle") {
                w = models::triangle_wiring();
            } else if (m_wiring == "square") {
                w = models::square_wiring();
            } else {
                throw DomainError("unknown wiring '" + m_wiring + "' (expected triangle or square)");
            }
            // Outputs follow the target's variables, grouped per party in wiring order.
            std::size_t next = 0;
            for (auto& p : w.parties)
                for (auto& v : p.outputs) {
                    if (next >= target.variables().size()) throw DomainError("model search: target has too few variables for the wiring");
                    v = target.variables()[next++];
                }
            if (next != target.variables().size()) throw DomainError("model search: target has more variables than the wiring outputs");
            models::SearchOptions opt;
            opt.eps1 = m_eps1;
            if (!m_cards.empty()) opt.source_cards = parse_cards(m_cards);
            opt.lambda_card = m_lambda;
            opt.restarts = m_restarts;
            opt.lm_iterations = m_iters;
            opt.stop_tv = m_stop;
            opt.seed = m_seed;
            opt.threads = common.threads;
            auto r = models::search(target, w, opt);
            Metadata meta(common, "model search");
            meta.add("seed", std::to_string(m_seed));
            meta.add("eps1", m_eps1);
            meta.add("target", m_target);
            emit_json(common, meta,
                      {{"tv", r.tv},
                       {"restarts_run", r.restarts_run},
                       {"best_restart", r.best_restart},
                       {"model", models::to_json(r.model)},
                       {"audit", models::to_json(models::audit(r.model))},
                       {"note", "search failure is evidence, not proof; the certificates decide nonlocality"}});
        };
    });

    auto* mo_audit = mo->add_subcommand("audit", "eps1*, eps2* of a model");
    add_common(mo_audit);
    mo_audit->add_option("--model", m_model, "Model JSON")->required();
    std::optional<double> a_eps1;
    mo_audit->add_option("--eps1", a_eps1, "Also report validity at this eps1");
    mo_audit->callback([&] {
        action = [&] {
            auto m = read_model(m_model);
            auto a = models::audit(m);
            Metadata meta(common, "model audit");
            meta.add("model", m_model);
            json body = {{"audit", models::to_json(a)}};
            if (a_eps1) {
                body["eps1"] = *a_eps1;
                body["valid"] = models::validate(m, *a_eps1);
            }
            emit_json(common, meta, body);
        };
    });

    auto* mo_eval = mo->add_subcommand("eval", "Induced distribution of a model");
    add_common(mo_eval);
    mo_eval->add_option("--model", m_model, "Model JSON")->required();
    mo_eval->add_option("--target", m_target, "Also report TV to this distribution");
    mo_eval->callback([&] {
        action = [&] {
            auto m = read_model(m_model);
            auto d = models::induced_distribution(m);
            Metadata meta(common, "model eval");
            meta.add("model", m_model);
            json body = {{"distribution", to_json(d)}};
            if (!m_target.empty()) body["tv"] = total_variation(d, read_distribution(m_target));
            emit_json(common, meta, body);
        };
    });

    // ---- sample / estimate ----
    auto* sa = app.add_subcommand("sample", "Draw outcome tuples from a distribution, CSV");
    add_common(sa);
    std::string sa_dist;
    std::size_t sa_n = 1000;
    std::uint64_t sa_seed = 0;
    sa->add_option("--dist", sa_dist, "Distribution JSON")->required();
    sa->add_option("--n", sa_n, "Number of samples")->capture_default_str();
    sa->add_option("--seed", sa_seed, "Seed for std::mt19937_64")->capture_default_str();
    sa->callback([&] {
        action = [&] {
            auto d = read_distribution(sa_dist);
            auto samples = sample(d, sa_n, sa_seed);
            Metadata meta(common, "sample");
            meta.add("seed", std::to_string(sa_seed));
            meta.add("n", std::to_string(sa_n));
            meta.add("prng", "mt19937_64");
            std::string text = meta.csv_header();
            auto names = d.names();
            for (std::size_t i = 0; i < names.size(); ++i) text += (i ? "," : "") + names[i];
            text += "\n";
            for (const auto& s : samples) {
                for (std::size_t i = 0; i < s.size(); ++i) text += (i ? "," : "") + d.variables()[i].alphabet[s[i]];
                text += "\n";
            }
            write_output(common, text);
        };
    });

    auto* es = app.add_subcommand("estimate", "Empirical distribution from a sample CSV");
    add_common(es);
    std::string es_samples, es_dist;
    es->add_option("--samples", es_samples, "Sample CSV as written by 'sample'")->required();
    es->add_option("--dist", es_dist, "Distribution JSON supplying variables and alphabets (default: inferred, labels sorted)");
    es->callback([&] {
        action = [&] {
            std::stringstream in(read_file(es_samples));
            std::vector<std::string> header;
            std::vector<std::vector<std::string>> rows;
            for (std::string line; std::getline(in, line);) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty() || line[0] == '#') continue;
                std::vector<std::string> fields;
                std::stringstream ls(line);
                for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
                if (header.empty()) {
                    header = std::move(fields);
                } else {
                    if (fields.size() != header.size()) throw DomainError("estimate: row with " + std::to_string(fields.size()) + " fields, header has " + std::to_string(header.size()));
                    rows.push_back(std::move(fields));
                }
            }
            if (header.empty()) throw DomainError("estimate: sample file has no header");
            std::vector<Variable> vars;
            if (!es_dist.empty()) {
                vars = read_distribution(es_dist).variables();
                if (vars.size() != header.size()) throw DomainError("estimate: header does not match the distribution's variables");
                for (std::size_t i = 0; i < vars.size(); ++i)
                    if (vars[i].name != header[i]) throw DomainError("estimate: header column '" + header[i] + "' does not match variable '" + vars[i].name + "'");
            } else {
                for (std::size_t i = 0; i < header.size(); ++i) {
                    std::vector<std::string> labels;
                    for (const auto& r : rows) labels.push_back(r[i]);
                    std::sort(labels.begin(), labels.end());
                    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
                    vars.push_back({header[i], labels});
                }
            }
            std::vector<Outcome> samples;
            for (const auto& r : rows) {
                Outcome o(r.size());
                for (std::size_t i = 0; i < r.size(); ++i) {
                    const auto& a = vars[i].alphabet;
                    auto it = std::find(a.begin(), a.end(), r[i]);
                    if (it == a.end()) throw DomainError("estimate: label '" + r[i] + "' not in alphabet of '" + vars[i].name + "'");
                    o[i] = static_cast<std::size_t>(it - a.begin());
                }
                samples.push_back(std::move(o));
            }
            auto e = estimate(vars, samples);
            Metadata meta(common, "estimate");
            meta.add("samples", es_samples);
            emit_json(common, meta, {{"n", e.n}, {"counts", e.counts}, {"distribution", to_json(e.frequencies())}, {"standard_errors", e.standard_errors()}});
        };
    });

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 1;
    }

    try {
        if (!action) throw DomainError("no command selected");
        action();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

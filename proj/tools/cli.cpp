#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "gptpsim/metrics.hpp"
#include "gptpsim/scenario.hpp"
#include "gptpsim/simulation.hpp"

namespace gptpsim::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Source {
    std::string builtin;
    std::string scenario_path;
};

ScenarioConfig load(const Source& src) {
    if (!src.builtin.empty() && !src.scenario_path.empty()) {
        throw UsageError("give either --builtin or --scenario, not both");
    }
    if (!src.builtin.empty()) {
        auto c = builtin_scenario(src.builtin);
        if (!c) throw UsageError("unknown builtin '" + src.builtin + "' (see 'list')");
        return *c;
    }
    if (!src.scenario_path.empty()) return load_scenario_file(src.scenario_path);
    throw UsageError("a scenario is required: --builtin NAME or --scenario FILE");
}

std::int64_t parse_epsilon(const std::string& text) {
    if (auto d = parse_duration(text)) return d->count();
    try {
        std::size_t used = 0;
        const auto v = std::stoll(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("bad epsilon '" + text + "' (use e.g. 1us or 1000)");
}

void apply_seed(ScenarioConfig& config, const std::optional<std::uint64_t>& flag) {
    if (flag) {
        config.seed = *flag;
        return;
    }
    if (const char* env = std::getenv("GPTPSIM_SEED"); env != nullptr && *env != '\0') {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used != std::string_view(env).size()) throw std::invalid_argument("trailing characters");
            config.seed = v;
        } catch (const std::exception&) {
            throw UsageError(std::string("GPTPSIM_SEED is not an unsigned integer: ") + env);
        }
    }
}

std::string ms_text(std::optional<std::int64_t> ns_value) {
    if (!ns_value) return "-";
    std::ostringstream o;
    o << std::fixed << std::setprecision(3) << static_cast<double>(*ns_value) / 1e6 << "ms";
    return o.str();
}

void print_pairs(const RunSummary& s, std::ostream& out) {
    out << std::left << std::setw(15) << "node" << std::setw(7) << "domain" << std::setw(15) << "gm"
        << std::setw(14) << "converged_at" << std::setw(14) << "max_abs_ns" << std::setw(12) << "p2p_ns"
        << "slope_ppm\n";
    for (const auto& p : s.pairs) {
        out << std::left << std::setw(15) << p.node << std::setw(7) << p.domain << std::setw(15) << p.gm;
        if (p.is_gm) {
            out << "grandmaster\n";
            continue;
        }
        out << std::setw(14) << (p.convergence_time_ns ? ms_text(p.convergence_time_ns) : "not converged")
            << std::setw(14)
            << (p.max_abs_diff_after_convergence_ns ? std::to_string(*p.max_abs_diff_after_convergence_ns) : "-")
            << std::setw(12) << p.peak_to_peak_ns;
        if (p.divergence_slope_ppm) {
            std::ostringstream o;
            o << std::fixed << std::setprecision(3) << *p.divergence_slope_ppm;
            out << o.str();
        } else {
            out << "-";
        }
        out << '\n';
    }
}

int cmd_run(const Source& src, const std::optional<std::uint64_t>& seed, const std::string& out_dir,
            const std::string& duration, const std::string& epsilon, std::ostream& out) {
    auto config = load(src);
    apply_seed(config, seed);
    if (!duration.empty()) {
        auto d = parse_duration(duration);
        if (!d || *d <= Duration::zero()) throw UsageError("bad duration '" + duration + "'");
        config.duration = *d;
        if (auto issues = validate_scenario(config); !issues.empty()) throw ScenarioError(std::move(issues));
    }
    const std::int64_t eps = epsilon.empty() ? kDefaultEpsilonNs : parse_epsilon(epsilon);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const auto result = run_scenario(config);
    emit_csv(result.trace, (dir / "trace.csv").string());
    const auto summary = summarize(result, eps);
    {
        std::ofstream js(dir / "summary.json", std::ios::binary | std::ios::trunc);
        if (!js) throw std::runtime_error("IoError: cannot write summary.json");
        js << to_json(summary).dump(2) << '\n';
    }
    {
        std::ofstream log(dir / "events.log", std::ios::binary | std::ios::trunc);
        if (!log) throw std::runtime_error("IoError: cannot write events.log");
        result.log.write(log);
    }

    std::size_t converged = 0, slaves = 0;
    for (const auto& p : summary.pairs) {
        if (p.is_gm) continue;
        ++slaves;
        if (p.convergence_time_ns) ++converged;
    }
    out << "scenario " << config.name << " seed " << config.seed << ": " << format_duration(config.duration)
        << " simulated, " << result.events_processed << " events, " << result.trace.size() << " trace records\n";
    out << converged << "/" << slaves << " slave clocks converged (epsilon " << eps << " ns); "
        << result.frames.filtered << " frames filtered, " << result.frames.dropped << " dropped\n";
    out << "wrote " << (dir / "trace.csv").string() << ", " << (dir / "summary.json").string() << ", "
        << (dir / "events.log").string() << '\n';
    return kOk;
}

int cmd_analyze(const std::string& trace_path, const std::string& epsilon, const Source& src, std::ostream& out) {
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open trace " + trace_path);
    std::vector<TraceRecord> trace;
    try {
        trace = read_trace_csv(in);
    } catch (const MalformedCsv& e) {
        throw UsageError(e.what());
    }
    if (trace.empty()) throw UsageError("empty trace");
    std::map<DomainId, std::string> gms;
    if (!src.builtin.empty() || !src.scenario_path.empty()) {
        for (const auto& d : load(src).domains) gms.emplace(d.id, d.gm_node);
    } else {
        gms = infer_grandmasters(trace);
        std::set<DomainId> domains;
        for (const auto& r : trace) domains.insert(r.domain);
        for (auto d : domains) {
            if (!gms.contains(d)) {
                throw UsageError("cannot infer the grandmaster of domain " + std::to_string(d) +
                                 "; pass --builtin or --scenario");
            }
        }
    }
    SummaryOptions options;
    options.epsilon_ns = epsilon.empty() ? kDefaultEpsilonNs : parse_epsilon(epsilon);
    const auto summary = summarize(trace, gms, options);
    out << "trace " << trace_path << ": " << trace.size() << " records, epsilon " << options.epsilon_ns << " ns\n";
    print_pairs(summary, out);
    return kOk;
}

int cmd_sweep(const Source& src, const std::string& family_name, const std::string& epsilon,
              const std::string& out_dir, std::ostream& out) {
    auto base = load(src);
    std::vector<FaultEvent> family;
    if (!family_name.empty()) {
        auto f = builtin_fault_family(family_name);
        if (!f) throw UsageError("unknown fault family '" + family_name + "'");
        family = *f;
    } else {
        family = base.events;
        base.events.clear();
    }
    if (family.empty()) throw UsageError("empty fault family: pass --family or list candidate [events]");
    if (family.size() > 8) throw UsageError("fault family larger than 8 candidates");
    const std::int64_t eps = epsilon.empty() ? kDefaultEpsilonNs : parse_epsilon(epsilon);
    const auto result = faults_tolerated(base, family, eps);

    out << "family of " << family.size() << " faults on " << base.name << ": tolerates k = "
        << result.max_tolerated << '\n';
    if (result.witness) {
        out << "witness (" << result.witness->size() << " faults):";
        for (const auto& ev : *result.witness) out << "\n  " << describe(ev);
        out << '\n';
    } else {
        out << "no failing subset\n";
    }
    nlohmann::ordered_json j;
    j["scenario"] = base.name;
    j["max_tolerated"] = result.max_tolerated;
    j["family"] = nlohmann::ordered_json::array();
    for (const auto& ev : family) j["family"].push_back(describe(ev));
    j["witness"] = nullptr;
    if (result.witness) {
        j["witness"] = nlohmann::ordered_json::array();
        for (const auto& ev : *result.witness) j["witness"].push_back(describe(ev));
    }
    j["subsets"] = nlohmann::ordered_json::array();
    for (const auto& s : result.subsets) {
        j["subsets"].push_back({{"members", s.members},
                                {"tolerated", s.all_ecus_synchronized},
                                {"unsynchronized_ecus", s.unsynchronized_ecus}});
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream js(fs::path(out_dir) / "sweep.json", std::ios::binary | std::ios::trunc);
        if (!js) throw std::runtime_error("IoError: cannot write sweep.json");
        js << j.dump(2) << '\n';
    }
    return kOk;
}

int cmd_list(std::ostream& out) {
    for (const auto& b : builtin_catalog()) out << std::left << std::setw(13) << b.name << b.description << '\n';
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"gptpsim: discrete-event gPTP time synchronization simulator"};
    app.require_subcommand(1);

    Source src;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::string duration, epsilon, trace_path, family;

    auto* run_cmd = app.add_subcommand("run", "run a scenario and write trace.csv, summary.json, events.log");
    run_cmd->add_option("--builtin,-b", src.builtin, "builtin scenario name");
    run_cmd->add_option("--scenario,-s", src.scenario_path, "scenario file");
    run_cmd->add_option("--seed", seed, "random seed (default: GPTPSIM_SEED, else the scenario's)");
    run_cmd->add_option("--out,-o", out_dir, "output directory (created if absent)");
    run_cmd->add_option("--duration", duration, "override simulated duration, e.g. 20s");
    run_cmd->add_option("--epsilon", epsilon, "convergence threshold, e.g. 1us");

    auto* analyze_cmd = app.add_subcommand("analyze", "report convergence and offsets from a trace CSV");
    analyze_cmd->add_option("trace", trace_path, "trace.csv produced by run")->required();
    analyze_cmd->add_option("--epsilon", epsilon, "convergence threshold, e.g. 1us");
    analyze_cmd->add_option("--builtin,-b", src.builtin, "take grandmasters from this builtin");
    analyze_cmd->add_option("--scenario,-s", src.scenario_path, "take grandmasters from this scenario file");

    auto* sweep_cmd = app.add_subcommand("sweep", "exhaustive fault-tolerance sweep over a fault family");
    sweep_cmd->add_option("--builtin,-b", src.builtin, "base builtin scenario");
    sweep_cmd->add_option("--scenario,-s", src.scenario_path, "base scenario file ([events] become the family)");
    sweep_cmd->add_option("--family,-f", family, "builtin family: gm-failures or ring-links");
    sweep_cmd->add_option("--epsilon", epsilon, "convergence threshold, e.g. 1us");
    sweep_cmd->add_option("--out,-o", out_dir, "directory for sweep.json")->capture_default_str();

    auto* list_cmd = app.add_subcommand("list", "list builtin scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(src, seed, out_dir, duration, epsilon, out);
        if (analyze_cmd->parsed()) return cmd_analyze(trace_path, epsilon, src, out);
        if (sweep_cmd->parsed()) return cmd_sweep(src, family, epsilon, sweep_cmd->count("--out") ? out_dir : "", out);
        if (list_cmd->parsed()) return cmd_list(out);
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

}  // namespace gptpsim::cli

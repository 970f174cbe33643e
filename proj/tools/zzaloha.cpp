// zzaloha: command-line front end for the slotted Aloha / ZigZag models.
//
// Exit codes: 0 success, 1 usage error, 2 validation failure,
// 3 numerical failure (including any output row marked "error").

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zzaloha/errors.hpp"
#include "zzaloha/experiments.hpp"
#include "zzaloha/format.hpp"
#include "zzaloha/game.hpp"
#include "zzaloha/simulator.hpp"

namespace {

using namespace zzaloha;

enum Exit : int { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3 };

struct Options {
    std::string m;
    std::string pa;
    std::string qr;
    std::string qr_tagged;
    std::string channel = "both";
    std::string normalization = "frame";
    std::uint64_t seed = 20140601;
    long frames = 1'000'000;
    long warmup = 10'000;
    std::string out;
    std::string format = "csv";
    unsigned workers = 0;
    std::string figure;
    bool include_literal = false;
    std::string trace;
    std::string br_curve;
};

void add_common(CLI::App* cmd, Options& o, bool with_qr = true) {
    cmd->set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
    cmd->add_option("--m", o.m, "Number of users (others in game modes): value, list a,b or range a:b:s");
    cmd->add_option("--pa", o.pa, "Arrival probability p_a: value, list or range");
    if (with_qr) cmd->add_option("--qr", o.qr, "Retransmission probability q_r: value, list or range");
    cmd->add_option("--channel", o.channel, "classic, zigzag or both")
        ->check(CLI::IsMember({"classic", "zigzag", "both"}, CLI::ignore_case));
    cmd->add_option("--out", o.out, "Output file (default stdout); writes <out>.meta.json alongside");
    cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--workers", o.workers, "Worker threads (0: hardware concurrency)");
}

void add_normalization(CLI::App* cmd, Options& o) {
    cmd->add_option("--normalization", o.normalization, "Throughput per frame or per slot")
        ->check(CLI::IsMember({"frame", "slot"}));
}

std::vector<ChannelKind> channels(const std::string& name) {
    if (name == "both") return {ChannelKind::ZigZag, ChannelKind::Classic};
    return {parse_channel(name)};
}

void apply_common(ExperimentSpec& spec, const Options& o) {
    if (!o.m.empty()) spec.num_users = Axis::parse(o.m);
    if (!o.pa.empty()) spec.arrival_prob = Axis::parse(o.pa);
    if (!o.qr.empty()) spec.retransmit_prob = Axis::parse(o.qr);
    if (!o.qr_tagged.empty()) spec.tagged_retransmit = Axis::parse(o.qr_tagged);
    spec.channels = channels(o.channel);
    spec.normalization = o.normalization == "slot" ? Normalization::Slot : Normalization::Frame;
    spec.seed = o.seed;
    spec.frames = o.frames;
    spec.warmup = o.warmup;
    spec.workers = o.workers;
}

std::ostream& open_output(const Options& o, std::ofstream& file) {
    if (o.out.empty()) return std::cout;
    file.open(o.out);
    if (!file) throw UsageError("cannot open output file '" + o.out + "'");
    return file;
}

int emit(const ExperimentSpec& spec, const Options& o) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentTable table = run_experiment(spec);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ofstream file;
    std::ostream& os = open_output(o, file);
    if (o.format == "json") {
        write_json(os, table);
    } else {
        write_csv(os, table);
    }
    if (!o.out.empty()) {
        std::ofstream meta(o.out + ".meta.json");
        if (!meta) throw UsageError("cannot open '" + o.out + ".meta.json'");
        meta << sidecar_json(spec, table, elapsed) << '\n';
    }
    if (table.failed_rows > 0) {
        std::cerr << "zzaloha: " << table.failed_rows << " row(s) failed; see the status column\n";
        return kNumerical;
    }
    return kOk;
}

void require_single_point(const ExperimentSpec& spec, const char* what) {
    const bool tagged_swept = spec.tagged_retransmit && spec.tagged_retransmit->swept();
    if (spec.num_users.swept() || spec.arrival_prob.swept() || spec.retransmit_prob.swept() || tagged_swept) {
        throw UsageError(std::string(what) + " requires a single parameter point");
    }
}

void write_trace(const ExperimentSpec& spec, const std::string& path) {
    require_single_point(spec, "--trace");
    std::ofstream trace(path);
    if (!trace) throw UsageError("cannot open trace file '" + path + "'");
    for (auto kind : spec.channels) {
        trace << "# channel " << to_string(kind) << '\n';
        std::optional<double> tagged;
        if (spec.tagged_retransmit) tagged = spec.tagged_retransmit->front();
        const SimConfig cfg{SystemParams(static_cast<int>(spec.num_users.front()), spec.arrival_prob.front(),
                                         spec.retransmit_prob.front()),
                            ChannelModel{kind},
                            spec.frames,
                            spec.warmup,
                            spec.seed,
                            50,
                            tagged};
        run_sim(cfg, &trace);
    }
}

void write_br_curve(const ExperimentSpec& spec, const std::string& path) {
    require_single_point(spec, "--br-curve");
    std::ofstream os(path);
    if (!os) throw UsageError("cannot open '" + path + "'");
    os << "channel,q,best_response,tagged_throughput,flat\n";
    const int m = static_cast<int>(spec.num_users.front());
    const double pa = spec.arrival_prob.front();
    for (auto kind : spec.channels) {
        std::vector<BrSample> curve;
        try {
            curve = find_equilibrium(m, pa, ChannelModel{kind}).br_curve;
        } catch (const NoEquilibriumError& e) {
            curve = e.br_curve();
        }
        for (const auto& s : curve) {
            os << to_string(kind) << ',' << format_number(s.q) << ',' << format_number(s.best_response) << ','
               << format_number(s.tagged_throughput) << ',' << (s.flat ? 1 : 0) << '\n';
        }
    }
}

}  // namespace

// Fills options that were not given on the command line from the --config
// file. Keys may be top level or under a section named after the subcommand.
void apply_config(CLI::App* cmd) {
    const CLI::Option* config = cmd->get_config_ptr();
    if (config == nullptr || config->count() == 0) return;
    const auto path = config->as<std::string>();
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
        if (item.name == "++" || item.name == "--") continue;
        if (!item.parents.empty() && item.parents != std::vector<std::string>{cmd->get_name()}) {
            throw CLI::ConfigError("unexpected section in " + path + ": " + item.parents.front());
        }
        CLI::Option* opt = cmd->get_option_no_throw("--" + item.name);
        if (opt == nullptr || opt == config) throw CLI::ConfigError::Extras(item.fullname());
        if (opt->count() > 0) continue;
        opt->add_result(item.inputs);
        opt->run_callback();
    }
}

int main(int argc, char** argv) {
    CLI::App app{"Slotted Aloha with and without ZigZag decoding: chains, games, optimization, simulation"};
    app.set_version_flag("--version", std::string(tool_version()));
    app.require_subcommand(1);

    Options o;

    auto* team = app.add_subcommand("team", "Team (cooperative) chain metrics over a parameter grid");
    add_common(team, o);
    add_normalization(team, o);

    auto* game = app.add_subcommand("game", "Tagged-user metrics against M others");
    add_common(game, o);
    add_normalization(game, o);
    game->add_option("--qr-tagged", o.qr_tagged, "Tagged user's q_r (default: --qr)");

    auto* br = app.add_subcommand("best-response", "Tagged user's best response to the others' q_r");
    add_common(br, o);

    auto* eq = app.add_subcommand("equilibrium", "Symmetric equilibrium q* per (M, p_a)");
    add_common(eq, o, false);
    eq->add_option("--br-curve", o.br_curve, "Write the sampled best-response curve (single point only)");

    auto* opt = app.add_subcommand("optimize", "Team-optimal q_r per (M, p_a)");
    add_common(opt, o, false);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo simulation with batch-means errors");
    add_common(sim, o);
    add_normalization(sim, o);
    sim->add_option("--qr-tagged", o.qr_tagged, "Add a tagged user with this q_r");
    sim->add_option("--seed", o.seed, "Generator seed");
    sim->add_option("--frames", o.frames, "Total frames per run, warmup included");
    sim->add_option("--warmup", o.warmup, "Warmup frames excluded from estimates");
    sim->add_option("--trace", o.trace, "Write a per-frame trace CSV (single point only)");

    auto* fig = app.add_subcommand("figure", "Regenerate a figure's data (fig3..fig10)");
    fig->add_option("id", o.figure, "Figure id")->required();
    add_common(fig, o);

    auto* val = app.add_subcommand("validate", "Run the invariant suite");
    val->set_config("--config", "", "TOML/INI file with option values");
    val->add_flag("--include-literal", o.include_literal, "Also report the printed chain's row defects");
    val->add_option("--seed", o.seed, "Simulation seed");
    val->add_option("--frames", o.frames, "Simulation frames per configuration");

    try {
        app.parse(argc, argv);
        for (auto* cmd : app.get_subcommands()) apply_config(cmd);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (val->parsed()) {
            ValidationGrid grid;
            grid.include_literal = o.include_literal;
            grid.seed = o.seed;
            grid.sim_frames = o.frames;
            const ValidationSummary summary = validate_all(grid);
            print_summary(std::cout, summary);
            return summary.ok() ? kOk : kValidation;
        }

        ExperimentSpec spec;
        if (fig->parsed()) {
            spec = figure_spec(parse_figure(o.figure));
            if (!o.qr.empty()) spec.fixed_retransmit = true;
            apply_common(spec, o);
        } else {
            apply_common(spec, o);
            if (team->parsed()) spec.mode = Mode::Team;
            if (game->parsed()) spec.mode = Mode::Game;
            if (br->parsed()) spec.mode = Mode::BestResponse;
            if (eq->parsed()) spec.mode = Mode::Equilibrium;
            if (opt->parsed()) spec.mode = Mode::Optimize;
            if (sim->parsed()) spec.mode = Mode::Simulate;
        }
        spec.validate();
        if (!o.trace.empty()) write_trace(spec, o.trace);
        if (!o.br_curve.empty()) write_br_curve(spec, o.br_curve);
        return emit(spec, o);
    } catch (const UsageError& e) {
        std::cerr << "zzaloha: usage: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "zzaloha: invalid input: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "zzaloha: numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "iva/auxiva.hpp"
#include "iva/kernels.hpp"
#include "iva/lqpqm.hpp"
#include "iva/metrics.hpp"
#include "iva/report.hpp"
#include "iva/rng.hpp"
#include "iva/stft.hpp"
#include "iva/synth.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr std::uint64_t kDefaultSeed = 20212021;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("IVA_LQPQM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::logic_error&) {
            throw iva::InvalidInput("IVA_LQPQM_SEED is not an integer");
        }
    }
    return kDefaultSeed;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw iva::IoError("cannot create " + path.string());
    os << text;
    if (!os) throw iva::IoError("short write to " + path.string());
}

void write_manifest(const std::string& out_dir, const std::string& subcommand,
                    std::uint64_t seed, unsigned threads, const nlohmann::json& config) {
    nlohmann::json j;
    j["tool"] = "ivasep";
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["threads"] = threads;
    j["kernels"] = iva::kernels::active().name;
    j["config"] = config;
    std::filesystem::create_directories(out_dir);
    write_text(std::filesystem::path(out_dir) / "manifest.json", j.dump(2) + "\n");
}

int run_lqpqm_demo() {
    using namespace iva;
    // one-dimensional instance with a closed form: the largest secular root
    // solves lambda^2 - 3 lambda + 1 = 0
    lqpqm::Problem p(linalg::ComplexMatrix::identity(1), {0.0},
                     linalg::ComplexMatrix::identity(1), {-1.0}, 0.0);
    const lqpqm::Solution sol = lqpqm::solve(p);
    std::cout << "lqpqm demo: minimize |q|^2 - log(|q + 1|^2)\n";
    std::cout << "  lambda* = " << report::format_double(sol.lambda)
              << "  (closed form (3 + sqrt(5))/2 = 2.6180339887...)\n";
    std::cout << "  q*      = " << report::format_double(sol.q[0].real())
              << "  (closed form (sqrt(5) - 1)/2 = 0.6180339887...)\n";
    std::cout << "  value   = " << report::format_double(sol.objective) << "\n";
    std::cout << "  newton iterations: " << sol.newton_iterations << "\n";
    const double expect = (3.0 + std::sqrt(5.0)) / 2.0;
    return std::abs(sol.lambda - expect) < 1e-9 ? 0 : 2;
}

int run_lqpqm_random(std::size_t dim, std::size_t count, std::uint64_t seed) {
    using namespace iva;
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        linalg::ComplexMatrix a = synth::random_hermitian_pd(dim, rng);
        linalg::ComplexMatrix c = synth::random_hermitian_pd(dim, rng);
        linalg::ComplexVector b(dim), d(dim);
        for (auto& v : b) v = rng.complex_normal();
        for (auto& v : d) v = rng.complex_normal();
        const double z = rng.exponential();
        const lqpqm::Solution sol = lqpqm::solve(lqpqm::Problem(a, b, c, d, z));
        std::cout << "instance " << i << ": lambda* = " << report::format_double(sol.lambda)
                  << ", objective = " << report::format_double(sol.objective)
                  << ", newton iterations = " << sol.newton_iterations << "\n";
    }
    return 0;
}

iva::synth::CampaignConfig load_campaign_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw iva::IoError("cannot open config " + path);
    return iva::synth::parse_campaign_config(is);
}

std::vector<iva::auxiva::UpdateRule> parse_rules(const std::string& csv) {
    std::vector<iva::auxiva::UpdateRule> rules;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) rules.push_back(iva::auxiva::rule_from_name(tok));
    return rules;
}

nlohmann::json campaign_json(const iva::synth::CampaignConfig& cfg) {
    nlohmann::json j;
    j["M"] = cfg.M;
    j["F"] = cfg.F;
    j["N"] = cfg.N;
    j["trials"] = cfg.trials;
    j["iterations"] = cfg.iterations;
    std::string rules;
    for (const auto& r : cfg.rules) {
        if (!rules.empty()) rules += ',';
        rules += iva::auxiva::rule_name(r);
    }
    j["rules"] = rules;
    j["stable_stop"] = cfg.stable_stop;
    return j;
}

void emit_campaign(const iva::synth::CampaignConfig& cfg, const iva::synth::CampaignResult& result,
                   const std::string& subcommand) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_path);
    write_text(fs::path(cfg.out_path) / "trace.csv", result.trace_csv);
    write_text(fs::path(cfg.out_path) / "summary.csv", result.summary_csv);
    write_manifest(cfg.out_path, subcommand, cfg.seed, cfg.threads, campaign_json(cfg));
    for (const std::string& err : result.trial_errors) std::cerr << "warning: " << err << "\n";
    if (!result.trial_errors.empty())
        std::cerr << "warning: " << result.trial_errors.size()
                  << " trial(s) failed and were excluded\n";
    std::cout << result.summary_csv;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"AuxIVA blind source separation toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 1;
    std::string out_path;
    app.add_option("--seed", seed, "random seed (default 20212021, or IVA_LQPQM_SEED)")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--threads", threads, "worker threads for trials / frequency bins")
        ->check(CLI::Range(1u, 256u));
    app.add_option("--out", out_path, "output directory");

    // --- lqpqm ---
    auto* cmd_lqpqm = app.add_subcommand("lqpqm", "solve log-penalized quadratic instances");
    bool demo = false;
    std::size_t lq_dim = 3, lq_count = 5;
    cmd_lqpqm->add_flag("--demo", demo, "run the one-dimensional worked example");
    cmd_lqpqm->add_option("--dim", lq_dim, "dimension of random instances");
    cmd_lqpqm->add_option("--count", lq_count, "number of random instances");

    // --- campaigns ---
    std::string config_path, rules_csv;
    std::size_t opt_m = 0, opt_f = 0, opt_n = 0, opt_trials = 0;
    int opt_iters = -1, opt_stable = -1;

    auto add_campaign_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value config file");
        cmd->add_option("--M", opt_m, "number of sources/channels");
        cmd->add_option("--F", opt_f, "number of parallel mixtures");
        cmd->add_option("--N", opt_n, "frames per mixture");
        cmd->add_option("--trials", opt_trials, "number of random trials");
        cmd->add_option("--iters", opt_iters, "iterations per trial");
        cmd->add_option("--rules", rules_csv, "comma list of ip,ip2,iss,ipa,sedjoco");
    };
    auto* cmd_sedjoco = app.add_subcommand("sedjoco-bench", "random joint-congruence benchmark");
    add_campaign_options(cmd_sedjoco);
    auto* cmd_synth = app.add_subcommand("synth-bench", "synthetic Laplace mixture benchmark");
    add_campaign_options(cmd_synth);
    cmd_synth->add_option("--stable-stop", opt_stable,
                          "stop trials after this many stable iterations (0 = run all)");

    // --- separate ---
    auto* cmd_sep = app.add_subcommand("separate", "separate a multichannel WAV file");
    std::string in_wav, refs_wav, rule_name = "ipa", contrast_name = "laplace";
    int sep_iters = 100;
    std::size_t frame = 4096, hop = 1024, ref_channel = 0;
    double noise_snr_db = std::numeric_limits<double>::quiet_NaN();
    double early_stop = -1.0;
    bool timing = false;
    cmd_sep->add_option("--in", in_wav, "input mixture WAV")->required();
    cmd_sep->add_option("--rule", rule_name, "update rule: ip, ip2, iss, ipa, sedjoco");
    cmd_sep->add_option("--iters", sep_iters, "maximum iterations");
    cmd_sep->add_option("--frame", frame, "analysis frame size (power of two)");
    cmd_sep->add_option("--hop", hop, "analysis hop size");
    cmd_sep->add_option("--contrast", contrast_name, "contrast model");
    cmd_sep->add_option("--ref-channel", ref_channel, "reference channel for scale restoration");
    cmd_sep->add_option("--refs", refs_wav, "reference WAV with one channel per source");
    cmd_sep->add_option("--noise-snr", noise_snr_db,
                        "add white noise for this SNR (dB) at the reference channel");
    cmd_sep->add_option("--early-stop", early_stop,
                        "stop when one iteration reduces the cost by less than this "
                        "(default 10*M, 0 disables)");
    cmd_sep->add_flag("--timing", timing, "include runtime_seconds in report.json");

    // --- metrics ---
    auto* cmd_metrics = app.add_subcommand("metrics", "score estimates against references");
    std::string met_refs, met_est, met_mix;
    cmd_metrics->add_option("--refs", met_refs, "reference WAV, one channel per source")->required();
    cmd_metrics->add_option("--est", met_est, "estimate WAV, one channel per source")->required();
    cmd_metrics->add_option("--mix", met_mix, "mixture WAV for delta metrics (reference channel 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // non-help parse problems are usage errors
    }

    try {
        if (!seed_given) seed = default_seed();

        if (cmd_lqpqm->parsed()) {
            return demo ? run_lqpqm_demo() : run_lqpqm_random(lq_dim, lq_count, seed);
        }

        if (cmd_sedjoco->parsed() || cmd_synth->parsed()) {
            iva::synth::CampaignConfig cfg;
            if (!config_path.empty()) cfg = load_campaign_config(config_path);
            if (opt_m) cfg.M = opt_m;
            if (opt_f) cfg.F = opt_f;
            if (opt_n) cfg.N = opt_n;
            if (opt_trials) cfg.trials = opt_trials;
            if (opt_iters >= 0) cfg.iterations = opt_iters;
            if (opt_stable >= 0) cfg.stable_stop = opt_stable;
            if (!rules_csv.empty()) cfg.rules = parse_rules(rules_csv);
            if (seed_given || config_path.empty()) cfg.seed = seed;
            if (!out_path.empty()) cfg.out_path = out_path;
            cfg.threads = threads;
            if (cfg.rules.empty())
                cfg.rules = parse_rules(cmd_sedjoco->parsed() ? "ipa,ip2,ip,iss" : "ipa,ip2,ip");
            if (cfg.out_path.empty()) cfg.out_path = ".";

            const iva::synth::CampaignResult result = cmd_sedjoco->parsed()
                                                          ? iva::synth::run_sedjoco_campaign(cfg)
                                                          : iva::synth::run_synthetic_campaign(cfg);
            emit_campaign(cfg, result, cmd_sedjoco->parsed() ? "sedjoco-bench" : "synth-bench");
            return 0;
        }

        if (cmd_sep->parsed()) {
            if (out_path.empty()) out_path = ".";
            iva::stft::SeparateOptions opts;
            opts.rule = iva::auxiva::rule_from_name(rule_name);
            opts.iterations = sep_iters;
            opts.threads = threads;
            opts.cfg.frame_size = frame;
            opts.cfg.hop = hop;
            opts.contrast = contrast_name;
            opts.reference_channel = ref_channel;
            if (early_stop >= 0.0) opts.early_stop_cost_decrease = early_stop;

            iva::audio::TimeSignal mix = iva::audio::read_wav(in_wav);
            if (!std::isnan(noise_snr_db)) {
                // white Gaussian noise, variance set by the reference-channel
                // power and the requested SNR, added to every channel
                if (ref_channel >= mix.channel_count())
                    throw iva::InvalidInput("--ref-channel out of range");
                double power = 0.0;
                for (double v : mix.channels[ref_channel]) power += v * v;
                power /= static_cast<double>(std::max<std::size_t>(1, mix.length()));
                const double sigma = std::sqrt(power / std::pow(10.0, noise_snr_db / 10.0));
                iva::Rng rng(seed);
                for (auto& ch : mix.channels)
                    for (double& v : ch) v += sigma * rng.normal();
            }

            iva::audio::TimeSignal refs;
            if (!refs_wav.empty()) {
                refs = iva::audio::read_wav(refs_wav);
                opts.references = &refs;
            }

            iva::stft::SeparateResult result = iva::stft::separate(mix, opts);

            namespace fs = std::filesystem;
            fs::create_directories(out_path);
            const std::string stem = fs::path(in_wav).stem().string();
            for (std::size_t k = 0; k < result.sources.size(); ++k)
                iva::audio::write_wav(
                    (fs::path(out_path) / (stem + "_src" + std::to_string(k) + ".wav")).string(),
                    result.sources[k]);
            write_text(fs::path(out_path) / "report.csv", result.report.to_csv());
            write_text(fs::path(out_path) / "report.json", result.report.to_json(timing) + "\n");
            nlohmann::json cfg_json;
            cfg_json["in"] = in_wav;
            cfg_json["rule"] = rule_name;
            cfg_json["iterations"] = sep_iters;
            cfg_json["frame"] = frame;
            cfg_json["hop"] = hop;
            cfg_json["contrast"] = contrast_name;
            cfg_json["reference_channel"] = ref_channel;
            write_manifest(out_path, "separate", seed, threads, cfg_json);
            std::cout << "wrote " << result.sources.size() << " sources to " << out_path << "\n";
            if (!result.report.si_sir_db.empty()) {
                std::cout << "si_sir_db:";
                for (double v : result.report.si_sir_db)
                    std::cout << ' ' << iva::report::format_double(v);
                std::cout << "\n";
            }
            return 0;
        }

        if (cmd_metrics->parsed()) {
            const iva::audio::TimeSignal refs = iva::audio::read_wav(met_refs);
            const iva::audio::TimeSignal est = iva::audio::read_wav(met_est);
            std::vector<double> mix_ref;
            const std::vector<double>* mix_ptr = nullptr;
            if (!met_mix.empty()) {
                mix_ref = iva::audio::read_wav(met_mix).channels.at(0);
                mix_ptr = &mix_ref;
            }
            const std::size_t t_len = std::min(refs.length(), est.length());
            std::vector<std::vector<double>> r = refs.channels, e = est.channels;
            for (auto& ch : r) ch.resize(t_len);
            for (auto& ch : e) ch.resize(t_len);
            if (mix_ptr) mix_ref.resize(t_len);
            const iva::metrics::PermutationMetrics pm =
                iva::metrics::best_permutation_metrics(r, e, mix_ptr);

            nlohmann::json j;
            j["permutation"] = pm.permutation;
            j["si_sdr_db"] = pm.si_sdr_db;
            j["si_sir_db"] = pm.si_sir_db;
            if (!pm.delta_si_sdr_db.empty()) {
                j["delta_si_sdr_db"] = pm.delta_si_sdr_db;
                j["delta_si_sir_db"] = pm.delta_si_sir_db;
            }
            std::cout << j.dump(2) << "\n";
            if (!out_path.empty()) {
                std::filesystem::create_directories(out_path);
                write_text(std::filesystem::path(out_path) / "metrics.json", j.dump(2) + "\n");
            }
            return 0;
        }

        throw iva::InvalidInput("no subcommand selected");
    } catch (const iva::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const iva::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}

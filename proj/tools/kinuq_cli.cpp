// kinuq command-line harness: run / train / eval / study.
//
// Exit codes: 0 success, 2 config parse failure, 3 sample mismatch,
// 4 solver failure, 1 anything else.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <kinuq/harness.hpp>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int workers = 1;
    bool paper_scale = false;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON scenario config")
        ->envname("KINUQ_CONFIG")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--workers", args.workers, "worker-pool size")->check(CLI::PositiveNumber);
    cmd->add_flag("--paper-scale", args.paper_scale,
                  "start from full-resolution defaults instead of desk scale");
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

kinuq::HarnessConfig load_config(const CommonArgs& args) {
    kinuq::HarnessConfig hc =
        kinuq::parse_config(kinuq::read_file(args.config_path), args.paper_scale);
    if (args.seed_given) hc.scenario.seed = args.seed;
    return hc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bi-fidelity kinetic UQ harness"};
    app.require_subcommand(1);

    CommonArgs run_args, train_args, eval_args, study_args;
    std::string run_model, run_samples, eval_samples, eval_surrogate;
    int train_budget = 0, eval_budget = 0;
    std::vector<int> eval_r_list, study_r_list;
    bool with_reference = false;

    CLI::App* run = app.add_subcommand("run", "solver sweep over a sample file");
    run->add_option("model", run_model, "high | low")
        ->required()
        ->check(CLI::IsMember({"high", "low"}));
    add_common(run, run_args);
    run->add_option("--samples", run_samples, "sample CSV (id,z1..zd)")->required();

    CLI::App* train = app.add_subcommand("train", "offline stage: sweep, select, assemble");
    add_common(train, train_args);
    train->add_option("--budget", train_budget, "greedy budget N (overrides config)")
        ->check(CLI::PositiveNumber);

    CLI::App* eval = app.add_subcommand("eval", "online stage: reconstruct at test samples");
    add_common(eval, eval_args);
    eval->add_option("--surrogate", eval_surrogate, "surrogate directory from train")
        ->required();
    eval->add_option("--samples", eval_samples,
                     "test sample CSV (default: draw n_test from the test stream)");
    eval->add_option("--budget", eval_budget, "prefix budget (default: full)")
        ->check(CLI::PositiveNumber);
    eval->add_option("--r-list", eval_r_list, "error-table budgets, e.g. 2,5,10")
        ->delimiter(',');
    eval->add_flag("--with-reference", with_reference,
                   "run high-fidelity references and emit the error report");

    CLI::App* study = app.add_subcommand("study", "full pipeline + convergence table");
    add_common(study, study_args);
    study->add_option("--budget", train_budget, "greedy budget N (overrides config)")
        ->check(CLI::PositiveNumber);
    study->add_option("--r-list", study_r_list, "budgets for the convergence table")
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            kinuq::HarnessConfig hc = load_config(run_args);
            std::vector<kinuq::ParameterSample> samples =
                kinuq::read_samples_csv(run_samples);
            kinuq::cli_run(run_model == "high", hc, samples, run_args.out_dir,
                           run_args.workers);
        } else if (train->parsed()) {
            kinuq::HarnessConfig hc = load_config(train_args);
            if (train_budget > 0) hc.budget = train_budget;
            kinuq::cli_train(hc, train_args.out_dir, train_args.workers);
        } else if (eval->parsed()) {
            kinuq::HarnessConfig hc = load_config(eval_args);
            std::vector<kinuq::ParameterSample> samples;
            if (!eval_samples.empty()) {
                samples = kinuq::read_samples_csv(eval_samples);
            } else {
                samples = kinuq::draw_samples(hc.scenario.dimension(), hc.scenario.n_test,
                                              hc.scenario.seed, kinuq::SampleStream::test);
            }
            std::vector<int> r_list = eval_r_list;
            if (eval_budget > 0) r_list.push_back(eval_budget);
            kinuq::cli_eval(hc, eval_surrogate, samples, eval_args.out_dir,
                            eval_args.workers, with_reference, r_list);
        } else if (study->parsed()) {
            kinuq::HarnessConfig hc = load_config(study_args);
            if (train_budget > 0) hc.budget = train_budget;
            std::vector<int> r_list = study_r_list;
            if (r_list.empty()) r_list.push_back(hc.budget);
            kinuq::cli_study(hc, r_list, study_args.out_dir, study_args.workers);
        }
    } catch (const kinuq::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const kinuq::SampleMismatch& e) {
        std::fprintf(stderr, "sample mismatch: %s\n", e.what());
        return 3;
    } catch (const kinuq::IdMismatch& e) {
        std::fprintf(stderr, "sample mismatch: %s\n", e.what());
        return 3;
    } catch (const kinuq::SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

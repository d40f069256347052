#include <string>

#include <CLI11.hpp>

#include "ragopt/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Meta-prompting optimized RAG harness"};
    app.require_subcommand(1);

    ragopt::SplitArgs split_args;
    std::size_t train_size_opt = 0;
    auto* split = app.add_subcommand("split", "Build the deterministic train/test split");
    split->add_option("--input", split_args.input, "Resolved StrategyQA record file")->required();
    split->add_option("--out-dir", split_args.out_dir, "Output directory")->required();
    split->add_option("--test-size", split_args.test_size, "Test set size (default 490)");
    auto* train_size_flag =
        split->add_option("--train-size", train_size_opt,
                          "Cap the train side and discard the remainder");
    split->add_option("--seed", split_args.seed, "Shuffle seed");

    std::string stats_input;
    auto* stats = app.add_subcommand("stats", "Dataset statistics (counts, class balance)");
    stats->add_option("--input", stats_input, "Record file")->required();

    ragopt::OptimizeArgs opt_args;
    auto* optimize = app.add_subcommand("optimize", "Run instruction optimization");
    optimize->add_option("--config", opt_args.config, "Run configuration file")->required();
    optimize->add_flag("--resume", opt_args.resume, "Continue from the last checkpoint");
    optimize->add_option("--mode", opt_args.mode, "iterative (default) or brute-force");
    optimize->add_option("--n", opt_args.brute_n, "Brute-force candidate count (default 300)");

    ragopt::EvaluateArgs eval_args;
    std::string instruction_file;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate one mode over the test set");
    evaluate->add_option("--config", eval_args.config, "Run configuration file")->required();
    evaluate
        ->add_option("--mode", eval_args.mode,
                     "query-only | plain-rag | refined-rag | refined-no-iteration")
        ->required();
    auto* instr_flag = evaluate->add_option("--instruction-file", instruction_file,
                                            "Refinement instruction (refined modes)");

    ragopt::SignificanceArgs sig_args;
    auto* significance =
        app.add_subcommand("significance", "Unpaired t-test over two accuracy sample files");
    significance->add_option("--a", sig_args.a, "First sample file")->required();
    significance->add_option("--b", sig_args.b, "Second sample file")->required();
    significance->add_flag("--welch", sig_args.welch, "Welch form instead of pooled variance");

    CLI11_PARSE(app, argc, argv);

    if (split->parsed()) {
        if (train_size_flag->count() > 0) {
            split_args.train_size = train_size_opt;
        }
        return ragopt::cmd_split(split_args);
    }
    if (stats->parsed()) {
        return ragopt::cmd_stats(stats_input);
    }
    if (optimize->parsed()) {
        return ragopt::cmd_optimize(opt_args);
    }
    if (evaluate->parsed()) {
        if (instr_flag->count() > 0) {
            eval_args.instruction_file = instruction_file;
        }
        return ragopt::cmd_evaluate(eval_args);
    }
    if (significance->parsed()) {
        return ragopt::cmd_significance(sig_args);
    }
    return 1;
}

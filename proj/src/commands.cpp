#include "ragopt/commands.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "ragopt/config.hpp"
#include "ragopt/corpus.hpp"
#include "ragopt/errors.hpp"
#include "ragopt/evaluation.hpp"
#include "ragopt/optimizer.hpp"
#include "ragopt/run_log.hpp"
#include "ragopt/ttest.hpp"

namespace ragopt {

namespace {

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << '\n';
        return e.resumable_outage() ? 3 : 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

void print_stats(const std::string& name, const DatasetStats& s) {
    nlohmann::json j;
    to_json(j, s);
    std::cout << name << ": " << j.dump() << '\n';
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string trim_copy(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<double> read_sample_file(const std::filesystem::path& path) {
    std::vector<double> values;
    std::istringstream in(read_text_file(path));
    std::string token;
    while (in >> token) {
        if (!token.empty() && token.back() == ',') {
            token.pop_back();
        }
        if (token.empty()) {
            continue;
        }
        try {
            values.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw DataError("non-numeric value '" + token + "' in " + path.string());
        }
    }
    return values;
}

const EvalMode kTableOrder[] = {EvalMode::query_only, EvalMode::plain_rag, EvalMode::refined_rag,
                                EvalMode::refined_no_iteration};

void refresh_eval_table(const std::filesystem::path& out_dir) {
    std::vector<EvalReport> reports;
    for (EvalMode m : kTableOrder) {
        const auto file = out_dir / (std::string("eval_") + eval_mode_name(m) + ".json");
        if (!std::filesystem::exists(file)) {
            continue;
        }
        EvalReport r;
        from_json(nlohmann::json::parse(read_text_file(file)), r);
        reports.push_back(std::move(r));
    }
    if (reports.empty()) {
        return;
    }
    std::ofstream table(out_dir / "eval_table.txt", std::ios::trunc);
    table << render_report_table(reports);
}

} // namespace

int cmd_split(const SplitArgs& args) {
    return run_guarded([&] {
        const Dataset dataset = load_strategyqa(args.input);
        SplitSpec spec;
        spec.test_size = args.test_size;
        spec.train_size = args.train_size;
        spec.seed = args.seed;
        const SplitResult result = split(dataset, spec);

        std::filesystem::create_directories(args.out_dir);
        save_dataset(result.train, args.out_dir / "train.jsonl");
        save_dataset(result.test, args.out_dir / "test.jsonl");

        const DatasetStats input_stats = stats(dataset);
        const DatasetStats train_stats = stats(result.train);
        const DatasetStats test_stats = stats(result.test);
        print_stats("input", input_stats);
        print_stats("train", train_stats);
        print_stats("test", test_stats);

        nlohmann::json summary;
        nlohmann::json js;
        to_json(js, input_stats);
        summary["input"] = js;
        to_json(js, train_stats);
        summary["train"] = js;
        to_json(js, test_stats);
        summary["test"] = js;
        summary["seed"] = args.seed;
        std::ofstream out(args.out_dir / "split_stats.json", std::ios::trunc);
        out << summary.dump(2) << '\n';
        return 0;
    });
}

int cmd_stats(const std::filesystem::path& input) {
    return run_guarded([&] {
        const Dataset dataset = load_strategyqa(input);
        print_stats(input.filename().string(), stats(dataset));
        return 0;
    });
}

int cmd_optimize(const OptimizeArgs& args) {
    return run_guarded([&] {
        if (args.mode != "iterative" && args.mode != "brute-force") {
            throw ConfigError("mode must be 'iterative' or 'brute-force'");
        }
        const RunConfig cfg = load_run_config(args.config);
        if (cfg.train_path.empty()) {
            throw ConfigError("config must set data.train for optimization");
        }
        const Dataset train = load_strategyqa(cfg.train_path);

        std::filesystem::create_directories(cfg.output_dir);
        RunLogger logger(cfg.output_dir / "run_log.jsonl", args.resume);
        LlmClient client = build_llm_client(cfg);
        if (cfg.verbose_calls) {
            client.set_call_sink([&logger](const CallRecord& r) {
                nlohmann::json j;
                to_json(j, r);
                logger.append("call", std::move(j));
            });
        }
        RefinePipeline pipeline(client, cfg.templates, cfg.scoring);
        Optimizer optimizer(cfg.optimizer, train, pipeline, &logger, run_config_hash(cfg),
                            cfg.effective_concurrency(), cfg.meta_instruction);

        OptimizationResult result;
        try {
            if (args.resume) {
                result = optimizer.resume(logger.path());
            } else if (args.mode == "brute-force") {
                result = optimizer.run_brute_force(args.brute_n);
            } else {
                result = optimizer.run();
            }
        } catch (const BackendError& e) {
            logger.append("error",
                          nlohmann::json{{"message", e.what()},
                                         {"resumable", e.resumable_outage()}});
            logger.flush();
            throw;
        }

        std::ofstream best(cfg.output_dir / "best_instruction.txt", std::ios::trunc);
        best << result.best_instruction.text << '\n';
        nlohmann::json result_json;
        to_json(result_json, result);
        std::ofstream out(cfg.output_dir / "result.json", std::ios::trunc);
        out << result_json.dump(2) << '\n';
        logger.flush();

        std::cout << "best instruction (score " << format_score(result.best_instruction.score)
                  << ", step " << result.best_instruction.step_found
                  << "): " << result.best_instruction.text << '\n';
        return 0;
    });
}

int cmd_evaluate(const EvaluateArgs& args) {
    return run_guarded([&] {
        const RunConfig cfg = load_run_config(args.config);
        if (cfg.test_path.empty()) {
            throw ConfigError("config must set data.test for evaluation");
        }
        const EvalMode mode = eval_mode_from_name(args.mode);
        std::optional<std::string> instruction;
        if (mode_requires_instruction(mode)) {
            if (!args.instruction_file) {
                throw ConfigError(std::string(eval_mode_name(mode)) +
                                  " mode requires --instruction-file");
            }
            instruction = trim_copy(read_text_file(*args.instruction_file));
            if (instruction->empty()) {
                throw ConfigError("instruction file is empty: " +
                                  args.instruction_file->string());
            }
        }
        const Dataset test = load_strategyqa(cfg.test_path);

        std::filesystem::create_directories(cfg.output_dir);
        RunLogger logger(cfg.output_dir / "run_log.jsonl", /*append=*/true);
        LlmClient client = build_llm_client(cfg);
        if (cfg.verbose_calls) {
            client.set_call_sink([&logger](const CallRecord& r) {
                nlohmann::json j;
                to_json(j, r);
                logger.append("call", std::move(j));
            });
        }
        RefinePipeline pipeline(client, cfg.templates, cfg.scoring);

        const EvalReport report = evaluate(mode, test, instruction, pipeline,
                                           cfg.effective_concurrency(), &logger);
        logger.flush();

        nlohmann::json report_json;
        to_json(report_json, report);
        const auto report_file =
            cfg.output_dir / (std::string("eval_") + eval_mode_name(mode) + ".json");
        {
            std::ofstream out(report_file, std::ios::trunc);
            out << report_json.dump(2) << '\n';
        }
        refresh_eval_table(cfg.output_dir);

        std::cout << eval_mode_name(mode) << ": " << format_accuracy_cell(report) << '\n';
        return 0;
    });
}

int cmd_significance(const SignificanceArgs& args) {
    return run_guarded([&] {
        const std::vector<double> a = read_sample_file(args.a);
        const std::vector<double> b = read_sample_file(args.b);
        if (a.size() < 2 || b.size() < 2) {
            throw ConfigError("each sample file needs at least two values");
        }
        const TTestResult r = unpaired_ttest(a, b, args.welch);
        if (r.infinite_t()) {
            std::cout << "t = " << (r.t_statistic > 0 ? "inf" : "-inf") << '\n';
        } else {
            std::cout << "t = " << r.t_statistic << '\n';
        }
        std::cout << "df = " << r.degrees_of_freedom << '\n';
        std::cout << "p = " << r.p_two_tailed << '\n';
        return 0;
    });
}

} // namespace ragopt

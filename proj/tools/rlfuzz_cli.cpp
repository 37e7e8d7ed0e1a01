#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rlfuzz/analysis.hpp"
#include "rlfuzz/corpus.hpp"
#include "rlfuzz/coverage.hpp"
#include "rlfuzz/ddqn.hpp"
#include "rlfuzz/eval/coordinator.hpp"
#include "rlfuzz/eval/store.hpp"
#include "rlfuzz/eval/worker.hpp"
#include "rlfuzz/fuzz_env.hpp"
#include "rlfuzz/grammar.hpp"
#include "rlfuzz/harness.hpp"
#include "rlfuzz/kvconfig.hpp"
#include "rlfuzz/tcn.hpp"
#include "rlfuzz/toy_target.hpp"

namespace fs = std::filesystem;
using namespace rlfuzz;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write file: " + path);
    f.write(content.data(), std::streamsize(content.size()));
}

void ensure_out_dir(const std::string& out) {
    if (!out.empty()) fs::create_directories(out);
}

// "cfgNN"/"CN" preset name or a key-value config file path
tcn::TcnConfig resolve_tcn_config(const std::string& spec) {
    if (spec.empty()) return tcn::TcnConfig{};
    if (fs::exists(spec)) return tcn::config_from_kv(KvConfig::load(spec));
    return tcn::preset(spec);
}

ddqn::DdqnConfig resolve_ddqn_config(const std::string& spec) {
    if (spec.empty()) return ddqn::DdqnConfig{};
    if (fs::exists(spec)) return ddqn::config_from_kv(KvConfig::load(spec));
    return ddqn::preset(spec);
}

struct LoadedTcn {
    tcn::TcnModel model;
    corpus::Vocabulary vocab;
    std::string checkpoint_hash;
};

LoadedTcn load_tcn(const std::string& path) {
    std::map<std::string, std::string> meta;
    tcn::TcnModel model = tcn::load_checkpoint(path, &meta);
    auto it = meta.find("vocabulary");
    if (it == meta.end()) throw std::runtime_error("tcn checkpoint has no embedded vocabulary");
    corpus::Vocabulary vocab = corpus::Vocabulary::from_text(it->second);
    std::string hash = meta.count("vocab_hash") ? meta.at("vocab_hash") : "";
    return LoadedTcn{std::move(model), std::move(vocab), hash};
}

std::vector<std::pair<std::string, uint16_t>> parse_worker_list(const std::string& csv) {
    std::vector<std::pair<std::string, uint16_t>> out;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) {
                size_t colon = cur.rfind(':');
                if (colon == std::string::npos)
                    throw std::runtime_error("worker endpoint needs host:port, got " + cur);
                out.emplace_back(cur.substr(0, colon), uint16_t(std::stoi(cur.substr(colon + 1))));
                cur.clear();
            }
        } else {
            cur += c;
        }
    }
    return out;
}

// Runs test cases either locally or through a worker pool.
std::vector<cov::CoverageSet> execute_cases(const std::string& target_spec,
                                            const std::string& workers_csv,
                                            const std::vector<std::string>& cases,
                                            const std::string& work_dir) {
    if (workers_csv.empty()) {
        auto harness = cov::make_harness(target_spec, work_dir);
        std::vector<cov::CoverageSet> out;
        out.reserve(cases.size());
        for (const auto& c : cases) out.push_back(harness->execute(c));
        return out;
    }
    evalsvc::Coordinator coord;
    for (const auto& [host, port] : parse_worker_list(workers_csv)) coord.add_worker(host, port);
    evalsvc::JobRequest req;
    req.job_id = 1;
    req.target_name = target_spec;
    req.test_cases = cases;
    evalsvc::JobResult res = coord.submit_batch(req);
    std::vector<cov::CoverageSet> out;
    out.reserve(res.cases.size());
    for (auto& c : res.cases) {
        if (c.status != evalsvc::CASE_OK)
            throw std::runtime_error("remote execution failed for one test case (status " +
                                     std::to_string(int(c.status)) + ")");
        out.push_back(std::move(c.coverage));
    }
    return out;
}

uint64_t parse_count(const std::string& s) {
    // accepts plain integers with optional k/m suffix
    if (s.empty()) throw std::runtime_error("empty count");
    char suffix = char(std::tolower(s.back()));
    if (suffix == 'k') return uint64_t(std::stoull(s.substr(0, s.size() - 1))) * 1000ULL;
    if (suffix == 'm') return uint64_t(std::stoull(s.substr(0, s.size() - 1))) * 1000000ULL;
    return std::stoull(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coverage-guided generative fuzzing framework"};
    app.require_subcommand(1);

    // shared options, mirrored into every subcommand
    struct Common {
        uint64_t seed = 0;
        std::string config;
        std::string out = "out";
    };

    auto add_common = [](CLI::App* cmd, Common& c) {
        cmd->add_option("--seed", c.seed, "random seed");
        cmd->add_option("--config", c.config, "preset name or key-value config file");
        cmd->add_option("--out", c.out, "output directory");
    };

    int exit_code = 0;

    // ---- corpus gen ----
    auto* corpus_cmd = app.add_subcommand("corpus", "training corpus operations");
    corpus_cmd->require_subcommand(1);
    auto* corpus_gen = corpus_cmd->add_subcommand("gen", "generate a tag corpus with the grammar fuzzer");
    {
        auto common = std::make_shared<Common>();
        auto n_tags = std::make_shared<std::string>("409000");
        auto error_rate = std::make_shared<double>(0.05);
        add_common(corpus_gen, *common);
        corpus_gen->add_option("--tags", *n_tags, "number of tags to generate (k/m suffixes allowed)");
        corpus_gen->add_option("--error-rate", *error_rate, "rule-breaking rate for attribute values");
        corpus_gen->callback([common, n_tags, error_rate] {
            ensure_out_dir(common->out);
            grammar::GrammarConfig cfg = grammar::default_grammar(common->seed);
            cfg.error_rate = *error_rate;
            if (!common->config.empty()) {
                KvConfig kv = KvConfig::load(common->config);
                cfg.error_rate = kv.get_double_or("error_rate", cfg.error_rate);
                cfg.max_attrs_per_tag = int(kv.get_int_or("max_attrs_per_tag", cfg.max_attrs_per_tag));
            }
            std::ofstream corpus_out(common->out + "/corpus.txt", std::ios::binary);
            if (!corpus_out) throw std::runtime_error("cannot write corpus file");
            auto manifest = grammar::generate_corpus(cfg, parse_count(*n_tags), corpus_out);
            write_file(common->out + "/manifest.txt", manifest.to_text());

            KvConfig echo;
            echo.set_int("seed", static_cast<long long>(common->seed));
            echo.set_double("error_rate", cfg.error_rate);
            echo.set_int("max_attrs_per_tag", cfg.max_attrs_per_tag);
            echo.set_int("tags", static_cast<long long>(manifest.total));
            echo.save(common->out + "/effective_config.txt");
            std::printf("corpus: %llu tags -> %s/corpus.txt\n",
                        (unsigned long long)manifest.total, common->out.c_str());
        });
    }

    // ---- baseline run ----
    auto* baseline_cmd = app.add_subcommand("baseline", "grammar-fuzzer baseline");
    baseline_cmd->require_subcommand(1);
    auto* baseline_run = baseline_cmd->add_subcommand("run", "build baseline test-case sets and collect coverage");
    {
        auto common = std::make_shared<Common>();
        auto sets = std::make_shared<int>(6);
        auto cases_per_set = std::make_shared<int>(128);
        auto tags_per_case = std::make_shared<int>(128);
        auto target = std::make_shared<std::string>("toy");
        auto workers = std::make_shared<std::string>();
        add_common(baseline_run, *common);
        baseline_run->add_option("--sets", *sets, "number of test-case sets");
        baseline_run->add_option("--cases-per-set", *cases_per_set, "test cases per set");
        baseline_run->add_option("--tags-per-case", *tags_per_case, "tags inserted per test case");
        baseline_run->add_option("--target", *target, "target harness (toy or drcov:...)");
        baseline_run->add_option("--workers", *workers, "comma-separated worker endpoints");
        baseline_run->callback([common, sets, cases_per_set, tags_per_case, target, workers] {
            ensure_out_dir(common->out);
            grammar::GrammarConfig gcfg = grammar::default_grammar(common->seed);
            Rng rng(common->seed);

            std::string totals_csv = "set,case_count,blocks\n";
            std::vector<cov::CoverageSet> set_unions;
            for (int s = 0; s < *sets; ++s) {
                std::vector<std::string> cases;
                for (int c = 0; c < *cases_per_set; ++c) {
                    std::vector<std::string> tags;
                    for (int t = 0; t < *tags_per_case; ++t) {
                        const auto& spec = gcfg.tags[rng.uniform(gcfg.tags.size())];
                        tags.push_back(grammar::generate_tag(rng, spec, gcfg.error_rate,
                                                             size_t(gcfg.max_attrs_per_tag)));
                    }
                    cases.push_back(
                        grammar::build_test_case(tags, grammar::kDefaultTemplate).content);
                }
                auto coverages = execute_cases(*target, *workers, cases, common->out);
                cov::CoverageSet u = cov::coverage_union(coverages);
                cov::coverage_save(u, common->out + "/baseline_set" + std::to_string(s) + ".cov");
                totals_csv += std::to_string(s) + "," + std::to_string(cases.size()) + "," +
                              std::to_string(u.size()) + "\n";
                set_unions.push_back(std::move(u));
            }
            write_file(common->out + "/baseline_totals.csv", totals_csv);

            size_t best = 0;
            for (const auto& u : set_unions) best = std::max(best, u.size());
            std::printf("baseline: %d sets, best set %zu blocks\n", *sets, best);
        });
    }

    // ---- tcn ----
    auto* tcn_cmd = app.add_subcommand("tcn", "character-level generator model");
    tcn_cmd->require_subcommand(1);

    auto* tcn_train_cmd = tcn_cmd->add_subcommand("train", "train the generator on a tag corpus");
    {
        auto common = std::make_shared<Common>();
        auto corpus_path = std::make_shared<std::string>();
        auto epochs = std::make_shared<int>(100);
        auto patience = std::make_shared<int>(5);
        auto fraction = std::make_shared<double>(0.9);
        auto n_splits = std::make_shared<int>(5);
        auto split_index = std::make_shared<int>(0);
        auto max_chars = std::make_shared<std::string>("0");
        add_common(tcn_train_cmd, *common);
        tcn_train_cmd->add_option("--corpus", *corpus_path, "tag corpus file")->required();
        tcn_train_cmd->add_option("--epochs", *epochs, "maximum training epochs");
        tcn_train_cmd->add_option("--patience", *patience, "early-stopping patience");
        tcn_train_cmd->add_option("--train-fraction", *fraction, "train split fraction");
        tcn_train_cmd->add_option("--splits", *n_splits, "number of reproducible dataset splits");
        tcn_train_cmd->add_option("--split-index", *split_index, "which split to train on");
        tcn_train_cmd->add_option("--max-chars", *max_chars, "truncate the corpus (0 keeps everything)");
        tcn_train_cmd->callback([common, corpus_path, epochs, patience, fraction, n_splits,
                                 split_index, max_chars] {
            ensure_out_dir(common->out);
            std::string text = read_file(*corpus_path);
            uint64_t cap = parse_count(*max_chars);
            if (cap > 0 && text.size() > cap) text.resize(cap);
            if (text.empty()) throw std::runtime_error("corpus file is empty");

            corpus::Vocabulary vocab = corpus::Vocabulary::build(text);
            vocab.save(common->out + "/vocab.txt");

            tcn::TcnConfig cfg = resolve_tcn_config(common->config);
            cfg.vocab_size = vocab.size();
            config_to_kv(cfg).save(common->out + "/effective_config.txt");

            if (*split_index < 0 || *split_index >= *n_splits)
                throw std::runtime_error("--split-index must be in [0, --splits)");
            auto splits = corpus::make_splits(vocab.encode(text), *n_splits, *fraction, common->seed);
            tcn::TcnModel model(cfg, common->seed);

            tcn::TrainOptions opts;
            opts.max_epochs = *epochs;
            opts.patience = *patience;
            opts.seed = common->seed;
            opts.on_epoch = [](int e, double tl, double vl) {
                std::printf("epoch %d train %.4f val %.4f\n", e, tl, vl);
            };
            tcn::TrainResult result = tcn::train(model, splits[size_t(*split_index)], opts);

            std::map<std::string, std::string> meta;
            meta["vocabulary"] = vocab.to_text();
            meta["vocab_hash"] = std::to_string(vocab.content_hash());
            meta["split_index"] = std::to_string(*split_index);
            meta["n_splits"] = std::to_string(*n_splits);
            meta["best_epoch"] = std::to_string(result.best_epoch);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.9f", result.best_val_loss);
            meta["best_val_loss"] = buf;
            meta["seed"] = std::to_string(common->seed);
            tcn::save_checkpoint(model, common->out + "/model.tcn", meta);
            write_file(common->out + "/loss_history.csv", tcn::loss_history_csv(result));
            std::printf("tcn train: best epoch %d val loss %.4f -> %s/model.tcn\n",
                        result.best_epoch, result.best_val_loss, common->out.c_str());
        });
    }

    auto* tcn_sample_cmd = tcn_cmd->add_subcommand("sample", "sample HTML from a trained generator");
    {
        auto common = std::make_shared<Common>();
        auto checkpoint = std::make_shared<std::string>();
        auto chars = std::make_shared<std::string>("12000");
        auto temperature = std::make_shared<double>(1.0);
        add_common(tcn_sample_cmd, *common);
        tcn_sample_cmd->add_option("--checkpoint", *checkpoint, "tcn checkpoint")->required();
        tcn_sample_cmd->add_option("--chars", *chars, "characters to sample");
        tcn_sample_cmd->add_option("--temperature", *temperature, "sampling temperature");
        tcn_sample_cmd->callback([common, checkpoint, chars, temperature] {
            ensure_out_dir(common->out);
            LoadedTcn loaded = load_tcn(*checkpoint);
            Rng rng(common->seed);
            std::string body =
                tcn::sample_tags(loaded.model, loaded.vocab, parse_count(*chars), rng, *temperature);
            grammar::TestCase tc = grammar::build_test_case({body}, grammar::kDefaultTemplate,
                                                            grammar::TestCaseSource::Tcn, *checkpoint);
            std::string name = env::content_hash_hex(tc.content);
            write_file(common->out + "/case_" + name + ".html", tc.content);
            std::printf("tcn sample: %zu chars -> %s/case_%s.html\n", body.size(),
                        common->out.c_str(), name.c_str());
        });
    }

    auto* tcn_eval_cmd = tcn_cmd->add_subcommand("eval", "generate test cases and measure coverage");
    {
        auto common = std::make_shared<Common>();
        auto checkpoint = std::make_shared<std::string>();
        auto cases = std::make_shared<int>(128);
        auto chars = std::make_shared<std::string>("12000");
        auto target = std::make_shared<std::string>("toy");
        auto workers = std::make_shared<std::string>();
        auto temperature = std::make_shared<double>(1.0);
        add_common(tcn_eval_cmd, *common);
        tcn_eval_cmd->add_option("--checkpoint", *checkpoint, "tcn checkpoint")->required();
        tcn_eval_cmd->add_option("--cases", *cases, "number of test cases");
        tcn_eval_cmd->add_option("--chars", *chars, "characters per test case");
        tcn_eval_cmd->add_option("--target", *target, "target harness");
        tcn_eval_cmd->add_option("--workers", *workers, "comma-separated worker endpoints");
        tcn_eval_cmd->add_option("--temperature", *temperature, "sampling temperature");
        tcn_eval_cmd->callback([common, checkpoint, cases, chars, target, workers, temperature] {
            ensure_out_dir(common->out);
            LoadedTcn loaded = load_tcn(*checkpoint);
            Rng rng(common->seed);
            std::vector<std::string> case_contents;
            for (int i = 0; i < *cases; ++i) {
                std::string body = tcn::sample_tags(loaded.model, loaded.vocab,
                                                    parse_count(*chars), rng, *temperature);
                case_contents.push_back(grammar::build_test_case({body}, grammar::kDefaultTemplate,
                                                                 grammar::TestCaseSource::Tcn,
                                                                 *checkpoint)
                                            .content);
            }
            auto coverages = execute_cases(*target, *workers, case_contents, common->out);

            double total = 0.0;
            std::string csv = "case,blocks\n";
            cov::CoverageSet all;
            for (size_t i = 0; i < coverages.size(); ++i) {
                total += double(coverages[i].size());
                csv += std::to_string(i) + "," + std::to_string(coverages[i].size()) + "\n";
                all.insert(coverages[i].begin(), coverages[i].end());
            }
            double avg = total / double(coverages.size());
            write_file(common->out + "/per_case.csv", csv);
            cov::coverage_save(all, common->out + "/tcn_union.cov");
            KvConfig kv;
            kv.set_double("avg_blocks", avg);
            kv.set_int("cases", *cases);
            kv.set_int("union_blocks", static_cast<long long>(all.size()));
            kv.save(common->out + "/tcn_eval.txt");
            std::printf("tcn eval: %d cases, avg %.1f blocks, union %zu -> %s\n", *cases, avg,
                        all.size(), common->out.c_str());
        });
    }

    // ---- ddqn ----
    auto* ddqn_cmd = app.add_subcommand("ddqn", "coverage-guided agent");
    ddqn_cmd->require_subcommand(1);

    auto* ddqn_collect = ddqn_cmd->add_subcommand("collect", "run episodes and store experiences");
    {
        auto common = std::make_shared<Common>();
        auto tcn_ckpt = std::make_shared<std::string>();
        auto agent_ckpt = std::make_shared<std::string>();
        auto store_path = std::make_shared<std::string>();
        auto episodes = std::make_shared<int>(10);
        auto min_experiences = std::make_shared<std::string>("0");
        auto target = std::make_shared<std::string>("toy");
        auto target_len = std::make_shared<std::string>("12000");
        auto tcn_avg = std::make_shared<double>(0.0);
        auto avg_cases = std::make_shared<int>(128);
        add_common(ddqn_collect, *common);
        ddqn_collect->add_option("--tcn-checkpoint", *tcn_ckpt, "generator checkpoint")->required();
        ddqn_collect->add_option("--agent", *agent_ckpt, "collect with an existing agent checkpoint");
        ddqn_collect->add_option("--store", *store_path, "experience store file")->required();
        ddqn_collect->add_option("--episodes", *episodes, "number of episodes");
        ddqn_collect->add_option("--min-experiences", *min_experiences,
                                 "keep collecting until the store holds this many records");
        ddqn_collect->add_option("--target", *target, "target harness");
        ddqn_collect->add_option("--target-len", *target_len, "terminal test-case length");
        ddqn_collect->add_option("--tcn-avg-blocks", *tcn_avg,
                                 "generator mean blocks (estimated when omitted)");
        ddqn_collect->add_option("--tcn-avg-cases", *avg_cases,
                                 "cases used to estimate the generator mean");
        ddqn_collect->callback([common, tcn_ckpt, agent_ckpt, store_path, episodes, min_experiences,
                                target, target_len, tcn_avg, avg_cases] {
            ensure_out_dir(common->out);
            LoadedTcn loaded = load_tcn(*tcn_ckpt);
            auto harness = cov::make_harness(*target, common->out);
            env::TcnGenerator generator(loaded.model, loaded.vocab);
            Rng rng(common->seed);

            ddqn::ActionSpace actions{grammar::tag_names(grammar::default_grammar())};

            env::EnvConfig ecfg;
            ecfg.target_len = parse_count(*target_len);
            env::RewardSpec reward;
            reward.target_len = ecfg.target_len;
            if (*tcn_avg > 0.0) {
                reward.tcn_avg_blocks = *tcn_avg;
            } else {
                env::FuzzEnv probe_env(ecfg, actions, generator, *harness, env::RewardSpec{ecfg.target_len, 1.0});
                reward.tcn_avg_blocks =
                    env::estimate_generator_avg_blocks(probe_env, loaded.vocab, *avg_cases, rng);
                std::printf("estimated generator average: %.1f blocks over %d cases\n",
                            reward.tcn_avg_blocks, *avg_cases);
            }
            env::FuzzEnv fuzz_env(ecfg, actions, generator, *harness, reward);

            ddqn::DdqnConfig dcfg = resolve_ddqn_config(common->config);
            std::unique_ptr<ddqn::DdqnAgent> agent;
            if (!agent_ckpt->empty()) {
                agent = std::make_unique<ddqn::DdqnAgent>(ddqn::DdqnAgent::load(*agent_ckpt));
            } else {
                const auto& embed = loaded.model.params().find("embed")->w;
                agent = std::make_unique<ddqn::DdqnAgent>(dcfg, actions.size(), loaded.vocab.size(),
                                                          loaded.model.config().embed_dim, embed,
                                                          common->seed);
            }

            evalsvc::ExperienceStore store =
                fs::exists(*store_path) ? evalsvc::ExperienceStore::open(*store_path)
                                        : evalsvc::ExperienceStore::create(*store_path);

            env::Policy policy = [&agent](const corpus::EncodedSequence& s, Rng& r) {
                int a = agent->act(s, r);
                agent->note_env_step();
                return a;
            };

            uint64_t episode_id = store.count();
            uint64_t want = parse_count(*min_experiences);
            int episodes_run = 0;
            while (episodes_run < *episodes || (want > 0 && store.count() < want)) {
                env::EpisodeRecord rec = env::run_episode(fuzz_env, policy, loaded.vocab,
                                                          agent->config().state_window, rng);
                for (size_t i = 0; i < rec.experiences.size(); ++i) {
                    evalsvc::ExperienceRecord er;
                    er.episode_id = episode_id;
                    er.sequence = uint32_t(i);
                    er.generator_checkpoint = loaded.checkpoint_hash;
                    er.experience = rec.experiences[i];
                    store.append(er);
                }
                ++episode_id;
                ++episodes_run;
                std::printf("episode %d: %zu experiences, reward %.4f, %zu blocks\n", episodes_run,
                            rec.experiences.size(), rec.terminal_reward, rec.coverage_blocks);
                if (episodes_run >= *episodes && (want == 0 || store.count() >= want)) break;
            }
            std::printf("collect: store now holds %zu records\n", store.count());
        });
    }

    auto* ddqn_offline = ddqn_cmd->add_subcommand("train-offline", "train from stored experiences");
    {
        auto common = std::make_shared<Common>();
        auto tcn_ckpt = std::make_shared<std::string>();
        auto store_path = std::make_shared<std::string>();
        auto steps = std::make_shared<std::string>("1000");
        auto target = std::make_shared<std::string>();
        auto target_len = std::make_shared<std::string>("12000");
        auto eval_every = std::make_shared<int>(20);
        auto eval_cases = std::make_shared<int>(4);
        auto tcn_avg = std::make_shared<double>(1.0);
        add_common(ddqn_offline, *common);
        ddqn_offline->add_option("--tcn-checkpoint", *tcn_ckpt, "generator checkpoint (embedding source)")
            ->required();
        ddqn_offline->add_option("--store", *store_path, "experience store file")->required();
        ddqn_offline->add_option("--steps", *steps, "training steps");
        ddqn_offline->add_option("--target", *target,
                                 "target harness for periodic evaluation (omit to skip)");
        ddqn_offline->add_option("--target-len", *target_len, "terminal test-case length");
        ddqn_offline->add_option("--eval-every", *eval_every, "evaluate after this many steps");
        ddqn_offline->add_option("--eval-cases", *eval_cases, "test cases per evaluation");
        ddqn_offline->add_option("--tcn-avg-blocks", *tcn_avg, "generator mean blocks for rewards");
        ddqn_offline->callback([common, tcn_ckpt, store_path, steps, target, target_len, eval_every,
                                eval_cases, tcn_avg] {
            ensure_out_dir(common->out);
            LoadedTcn loaded = load_tcn(*tcn_ckpt);
            ddqn::ActionSpace actions{grammar::tag_names(grammar::default_grammar())};
            ddqn::DdqnConfig dcfg = resolve_ddqn_config(common->config);
            config_to_kv(dcfg).save(common->out + "/effective_config.txt");

            const auto& embed = loaded.model.params().find("embed")->w;
            ddqn::DdqnAgent agent(dcfg, actions.size(), loaded.vocab.size(),
                                  loaded.model.config().embed_dim, embed, common->seed);

            evalsvc::ExperienceStore store = evalsvc::ExperienceStore::open(*store_path);
            ddqn::PrioritizedReplay replay(size_t(dcfg.replay_capacity), dcfg.per_alpha,
                                           dcfg.per_epsilon);
            size_t n = store.count();
            if (n == 0) throw std::runtime_error("experience store is empty");
            for (size_t i = n > size_t(dcfg.replay_capacity) ? n - size_t(dcfg.replay_capacity) : 0;
                 i < n; ++i)
                replay.insert(store.read(i).experience);
            std::printf("replay filled with %zu experiences\n", replay.size());

            std::unique_ptr<cov::TargetHarness> harness;
            std::unique_ptr<env::TcnGenerator> generator;
            std::unique_ptr<env::FuzzEnv> fuzz_env;
            if (!target->empty()) {
                harness = cov::make_harness(*target, common->out);
                generator = std::make_unique<env::TcnGenerator>(loaded.model, loaded.vocab);
                env::EnvConfig ecfg;
                ecfg.target_len = parse_count(*target_len);
                fuzz_env = std::make_unique<env::FuzzEnv>(ecfg, actions, *generator, *harness,
                                                          env::RewardSpec{ecfg.target_len, *tcn_avg});
            }

            Rng rng(common->seed);
            uint64_t total_steps = parse_count(*steps);
            double best_eval = -1.0;
            std::string loss_csv = "step,loss\n";
            for (uint64_t s = 1; s <= total_steps; ++s) {
                auto stats = agent.train_step(replay, rng);
                if (s % 100 == 0 || s == total_steps) {
                    loss_csv += std::to_string(s) + "," + std::to_string(stats.loss) + "\n";
                    std::printf("step %llu loss %.6f\n", (unsigned long long)s, stats.loss);
                }
                if (fuzz_env && *eval_every > 0 && s % uint64_t(*eval_every) == 0) {
                    double mean = env::evaluate_checkpoint(*fuzz_env, agent, loaded.vocab,
                                                           *eval_cases, rng);
                    if (mean > best_eval) {
                        best_eval = mean;
                        agent.save(common->out + "/agent_best.ddqn",
                                   {{"eval_mean_blocks", std::to_string(mean)}});
                        std::printf("step %llu eval %.1f blocks (new best, snapshot)\n",
                                    (unsigned long long)s, mean);
                    }
                }
            }
            agent.save(common->out + "/agent_final.ddqn");
            write_file(common->out + "/loss_history.csv", loss_csv);
            std::printf("train-offline: %llu steps -> %s/agent_final.ddqn\n",
                        (unsigned long long)total_steps, common->out.c_str());
        });
    }

    auto* ddqn_online = ddqn_cmd->add_subcommand("train-online", "interleave collection and training");
    {
        auto common = std::make_shared<Common>();
        auto tcn_ckpt = std::make_shared<std::string>();
        auto steps = std::make_shared<std::string>("1000");
        auto target = std::make_shared<std::string>("toy");
        auto target_len = std::make_shared<std::string>("12000");
        auto eval_every = std::make_shared<int>(20);
        auto eval_cases = std::make_shared<int>(4);
        auto tcn_avg = std::make_shared<double>(0.0);
        auto avg_cases = std::make_shared<int>(128);
        auto warmup = std::make_shared<int>(0);
        add_common(ddqn_online, *common);
        ddqn_online->add_option("--tcn-checkpoint", *tcn_ckpt, "generator checkpoint")->required();
        ddqn_online->add_option("--steps", *steps, "training steps");
        ddqn_online->add_option("--target", *target, "target harness");
        ddqn_online->add_option("--target-len", *target_len, "terminal test-case length");
        ddqn_online->add_option("--eval-every", *eval_every, "evaluate after this many steps");
        ddqn_online->add_option("--eval-cases", *eval_cases, "test cases per evaluation");
        ddqn_online->add_option("--tcn-avg-blocks", *tcn_avg,
                                "generator mean blocks (estimated when omitted)");
        ddqn_online->add_option("--tcn-avg-cases", *avg_cases,
                                "cases used to estimate the generator mean");
        ddqn_online->add_option("--warmup-episodes", *warmup,
                                "episodes collected before training starts");
        ddqn_online->callback([common, tcn_ckpt, steps, target, target_len, eval_every, eval_cases,
                               tcn_avg, avg_cases, warmup] {
            ensure_out_dir(common->out);
            LoadedTcn loaded = load_tcn(*tcn_ckpt);
            auto harness = cov::make_harness(*target, common->out);
            env::TcnGenerator generator(loaded.model, loaded.vocab);
            Rng rng(common->seed);
            ddqn::ActionSpace actions{grammar::tag_names(grammar::default_grammar())};
            ddqn::DdqnConfig dcfg = resolve_ddqn_config(common->config);
            config_to_kv(dcfg).save(common->out + "/effective_config.txt");

            env::EnvConfig ecfg;
            ecfg.target_len = parse_count(*target_len);
            env::RewardSpec reward{ecfg.target_len, *tcn_avg};
            if (reward.tcn_avg_blocks <= 0.0) {
                env::FuzzEnv probe_env(ecfg, actions, generator, *harness,
                                       env::RewardSpec{ecfg.target_len, 1.0});
                reward.tcn_avg_blocks =
                    env::estimate_generator_avg_blocks(probe_env, loaded.vocab, *avg_cases, rng);
                std::printf("estimated generator average: %.1f blocks\n", reward.tcn_avg_blocks);
            }
            env::FuzzEnv fuzz_env(ecfg, actions, generator, *harness, reward);

            const auto& embed = loaded.model.params().find("embed")->w;
            ddqn::DdqnAgent agent(dcfg, actions.size(), loaded.vocab.size(),
                                  loaded.model.config().embed_dim, embed, common->seed);
            ddqn::PrioritizedReplay replay(size_t(dcfg.replay_capacity), dcfg.per_alpha,
                                           dcfg.per_epsilon);

            env::Policy policy = [&agent](const corpus::EncodedSequence& s, Rng& r) {
                int a = agent.act(s, r);
                agent.note_env_step();
                return a;
            };
            auto collect_episode = [&] {
                env::EpisodeRecord rec =
                    env::run_episode(fuzz_env, policy, loaded.vocab, dcfg.state_window, rng);
                for (auto& e : rec.experiences) replay.insert(std::move(e));
            };

            for (int i = 0; i < *warmup; ++i) collect_episode();
            while (replay.size() < size_t(dcfg.batch_size)) collect_episode();

            uint64_t total_steps = parse_count(*steps);
            double best_eval = -1.0;
            std::string loss_csv = "step,loss,epsilon\n";
            for (uint64_t s = 1; s <= total_steps; ++s) {
                collect_episode();
                auto stats = agent.train_step(replay, rng);
                if (s % 50 == 0 || s == total_steps) {
                    loss_csv += std::to_string(s) + "," + std::to_string(stats.loss) + "," +
                                std::to_string(agent.current_epsilon()) + "\n";
                    std::printf("step %llu loss %.6f eps %.3f\n", (unsigned long long)s, stats.loss,
                                agent.current_epsilon());
                }
                if (*eval_every > 0 && s % uint64_t(*eval_every) == 0) {
                    double mean =
                        env::evaluate_checkpoint(fuzz_env, agent, loaded.vocab, *eval_cases, rng);
                    if (mean > best_eval) {
                        best_eval = mean;
                        agent.save(common->out + "/agent_best.ddqn",
                                   {{"eval_mean_blocks", std::to_string(mean)}});
                        std::printf("step %llu eval %.1f blocks (new best, snapshot)\n",
                                    (unsigned long long)s, mean);
                    }
                }
            }
            agent.save(common->out + "/agent_final.ddqn");
            write_file(common->out + "/loss_history.csv", loss_csv);
            std::printf("train-online: done -> %s/agent_final.ddqn\n", common->out.c_str());
        });
    }

    // ---- fuzz run ----
    auto* fuzz_cmd = app.add_subcommand("fuzz", "guided test-case generation");
    fuzz_cmd->require_subcommand(1);
    auto* fuzz_run = fuzz_cmd->add_subcommand("run", "generate test cases with a trained agent");
    {
        auto common = std::make_shared<Common>();
        auto agent_ckpt = std::make_shared<std::string>();
        auto tcn_ckpt = std::make_shared<std::string>();
        auto cases = std::make_shared<int>(128);
        auto target = std::make_shared<std::string>("toy");
        auto target_len = std::make_shared<std::string>("12000");
        auto tcn_avg = std::make_shared<double>(1.0);
        add_common(fuzz_run, *common);
        fuzz_run->add_option("--agent", *agent_ckpt, "agent checkpoint")->required();
        fuzz_run->add_option("--tcn-checkpoint", *tcn_ckpt, "generator checkpoint")->required();
        fuzz_run->add_option("--cases", *cases, "number of test cases");
        fuzz_run->add_option("--target", *target, "target harness");
        fuzz_run->add_option("--target-len", *target_len, "terminal test-case length");
        fuzz_run->add_option("--tcn-avg-blocks", *tcn_avg, "generator mean blocks for rewards");
        fuzz_run->callback([common, agent_ckpt, tcn_ckpt, cases, target, target_len, tcn_avg] {
            ensure_out_dir(common->out);
            LoadedTcn loaded = load_tcn(*tcn_ckpt);
            auto harness = cov::make_harness(*target, common->out);
            env::TcnGenerator generator(loaded.model, loaded.vocab);
            ddqn::ActionSpace actions{grammar::tag_names(grammar::default_grammar())};
            ddqn::DdqnAgent agent = ddqn::DdqnAgent::load(*agent_ckpt);
            Rng rng(common->seed);

            env::EnvConfig ecfg;
            ecfg.target_len = parse_count(*target_len);
            env::FuzzEnv fuzz_env(ecfg, actions, generator, *harness,
                                  env::RewardSpec{ecfg.target_len, *tcn_avg});

            analysis::PolicyHistogram hist = analysis::PolicyHistogram::for_actions(actions);
            env::Policy greedy = [&agent](const corpus::EncodedSequence& s, Rng&) {
                return agent.act_greedy(s);
            };

            cov::CoverageSet all;
            std::string csv = "case,file,blocks,reward\n";
            for (int i = 0; i < *cases; ++i) {
                env::EpisodeRecord rec = env::run_episode(fuzz_env, greedy, loaded.vocab,
                                                          agent.config().state_window, rng);
                for (const auto& log : rec.log) hist.add(log.action);
                std::string name = env::content_hash_hex(rec.test_case.content);
                write_file(common->out + "/case_" + name + ".html", rec.test_case.content);
                write_file(common->out + "/case_" + name + ".log", env::episode_log_lines(rec));
                csv += std::to_string(i) + ",case_" + name + ".html," +
                       std::to_string(rec.coverage_blocks) + "," +
                       std::to_string(rec.terminal_reward) + "\n";
                cov::CoverageSet case_cov = harness->execute(rec.test_case.content);
                all.insert(case_cov.begin(), case_cov.end());
            }
            write_file(common->out + "/cases.csv", csv);
            cov::coverage_save(all, common->out + "/fuzz_union.cov");
            hist.save(common->out + "/policy_histogram.txt");
            std::printf("fuzz run: %d cases, union %zu blocks -> %s\n", *cases, all.size(),
                        common->out.c_str());
        });
    }

    // ---- worker serve ----
    auto* worker_cmd = app.add_subcommand("worker", "coverage evaluation worker");
    worker_cmd->require_subcommand(1);
    auto* worker_serve = worker_cmd->add_subcommand("serve", "serve test-case executions over TCP");
    {
        auto common = std::make_shared<Common>();
        auto listen = std::make_shared<std::string>("127.0.0.1:7391");
        auto target = std::make_shared<std::string>("toy");
        auto timeout_ms = std::make_shared<int>(10000);
        auto isolate = std::make_shared<bool>(true);
        auto fail_after = std::make_shared<long>(-1);
        add_common(worker_serve, *common);
        worker_serve->add_option("--listen", *listen, "host:port to listen on");
        worker_serve->add_option("--target", *target, "target harness");
        worker_serve->add_option("--timeout-ms", *timeout_ms, "per-case timeout");
        worker_serve->add_flag("--isolate,!--no-isolate", *isolate,
                               "run each case in a separate process (default on)");
        worker_serve->add_option("--fail-after", *fail_after, "abort after N cases (fault injection)")
            ->group("");
        worker_serve->callback([common, listen, target, timeout_ms, isolate, fail_after] {
            ensure_out_dir(common->out);
            auto harness = cov::make_harness(*target, common->out);
            size_t colon = listen->rfind(':');
            if (colon == std::string::npos) throw std::runtime_error("--listen needs host:port");

            evalsvc::WorkerOptions opts;
            opts.listen_host = listen->substr(0, colon);
            opts.port = uint16_t(std::stoi(listen->substr(colon + 1)));
            opts.timeout_ms = *timeout_ms;
            opts.fail_after_cases = *fail_after;
            opts.work_dir = common->out;
            if (*isolate) {
                std::string self = fs::read_symlink("/proc/self/exe").string();
                opts.isolate_command = self + " target exec-case --target " + *target +
                                       " --input {input} --out {out}";
            }
            evalsvc::Worker worker(opts, *harness);
            std::printf("worker: serving %s on %s:%u (timeout %d ms)\n", target->c_str(),
                        opts.listen_host.c_str(), unsigned(worker.port()), *timeout_ms);
            worker.serve();
        });
    }

    // ---- target exec-case (isolation helper) ----
    auto* target_cmd = app.add_subcommand("target", "direct target execution");
    target_cmd->require_subcommand(1);
    auto* exec_case = target_cmd->add_subcommand("exec-case", "execute one test case and write coverage");
    {
        auto target = std::make_shared<std::string>("toy");
        auto input = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        exec_case->add_option("--target", *target, "target harness");
        exec_case->add_option("--input", *input, "test case file")->required();
        exec_case->add_option("--out", *out, "coverage output file")->required();
        exec_case->callback([target, input, out] {
            auto harness = cov::make_harness(*target, fs::path(*out).parent_path().string());
            cov::CoverageSet cov_set = harness->execute(read_file(*input));
            cov::coverage_save(cov_set, *out);
        });
    }

    // ---- report ----
    auto* report_cmd = app.add_subcommand("report", "coverage comparison report");
    {
        auto common = std::make_shared<Common>();
        auto candidate = std::make_shared<std::vector<std::string>>();
        auto baseline = std::make_shared<std::vector<std::string>>();
        auto tcn_files = std::make_shared<std::vector<std::string>>();
        add_common(report_cmd, *common);
        report_cmd->add_option("--candidate", *candidate, "candidate coverage files")->required();
        report_cmd->add_option("--baseline", *baseline, "baseline coverage files")->required();
        report_cmd->add_option("--tcn", *tcn_files, "generator-only coverage files");
        report_cmd->callback([common, candidate, baseline, tcn_files] {
            ensure_out_dir(common->out);
            auto load_sets = [](const std::vector<std::string>& paths) {
                std::vector<cov::CoverageSet> sets;
                for (const auto& p : paths) sets.push_back(cov::coverage_load(p));
                return sets;
            };
            analysis::CoverageReport report =
                analysis::build_report(load_sets(*candidate), load_sets(*baseline), load_sets(*tcn_files));
            write_file(common->out + "/report.csv", report.to_csv());
            std::printf("%s\n", report.summary_line().c_str());
        });
    }

    // ---- policy kl ----
    auto* policy_cmd = app.add_subcommand("policy", "action policy analysis");
    policy_cmd->require_subcommand(1);
    auto* policy_kl = policy_cmd->add_subcommand("kl", "pairwise KL divergence of policy histograms");
    {
        auto common = std::make_shared<Common>();
        auto files = std::make_shared<std::vector<std::string>>();
        auto smoothing = std::make_shared<double>(1e-9);
        add_common(policy_kl, *common);
        policy_kl->add_option("--histograms", *files, "histogram files")->required();
        policy_kl->add_option("--smoothing", *smoothing, "smoothing epsilon");
        policy_kl->callback([common, files, smoothing] {
            ensure_out_dir(common->out);
            std::vector<analysis::PolicyHistogram> hists;
            for (const auto& f : *files) hists.push_back(analysis::PolicyHistogram::load(f));
            if (hists.size() == 1) {
                std::printf("0.0\n");
                write_file(common->out + "/kl_matrix.csv", "0.000000\n");
                return;
            }
            auto matrix = analysis::policy_similarity_matrix(hists, *smoothing);
            std::vector<std::string> labels;
            for (size_t i = 0; i < hists.size(); ++i) labels.push_back("h" + std::to_string(i));
            std::string csv = analysis::matrix_to_csv(matrix, labels);
            write_file(common->out + "/kl_matrix.csv", csv);
            std::printf("%s", csv.c_str());
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return exit_code;
}

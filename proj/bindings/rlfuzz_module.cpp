#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rlfuzz/analysis.hpp"
#include "rlfuzz/corpus.hpp"
#include "rlfuzz/coverage.hpp"
#include "rlfuzz/ddqn.hpp"
#include "rlfuzz/drcov.hpp"
#include "rlfuzz/grammar.hpp"
#include "rlfuzz/tcn.hpp"
#include "rlfuzz/toy_target.hpp"

namespace py = pybind11;
using namespace rlfuzz;

namespace {

using PyBlock = std::pair<uint16_t, uint32_t>;

std::set<PyBlock> to_py(const cov::CoverageSet& s) {
    std::set<PyBlock> out;
    for (const auto& b : s) out.emplace(b.module_id, b.offset);
    return out;
}

cov::CoverageSet from_py(const std::set<PyBlock>& s) {
    cov::CoverageSet out;
    for (const auto& [mod, off] : s) out.insert({mod, off});
    return out;
}

}  // namespace

PYBIND11_MODULE(_rlfuzz, m) {
    m.doc() = "coverage-guided generative fuzzing framework (core operations)";

    // ---- generator grammar ----
    m.def(
        "generate_corpus",
        [](uint64_t n_tags, uint64_t seed, double error_rate) {
            grammar::GrammarConfig cfg = grammar::default_grammar(seed);
            cfg.error_rate = error_rate;
            std::ostringstream out;
            grammar::CorpusManifest manifest = grammar::generate_corpus(cfg, n_tags, out);
            py::dict counts;
            for (const auto& [name, count] : manifest.per_tag_counts)
                counts[py::str(name)] = count;
            return py::make_tuple(out.str(), counts);
        },
        py::arg("n_tags"), py::arg("seed") = 0, py::arg("error_rate") = 0.05,
        "Generate a tag corpus; returns (text, per-tag counts).");

    m.def("default_tag_names",
          [] { return grammar::tag_names(grammar::default_grammar()); });

    m.def(
        "build_test_case",
        [](const std::vector<std::string>& tags, const std::string& templ) {
            return grammar::build_test_case(tags, templ).content;
        },
        py::arg("tags"), py::arg("template") = std::string(grammar::kDefaultTemplate));

    m.attr("DEFAULT_TEMPLATE") = std::string(grammar::kDefaultTemplate);

    // ---- vocabulary ----
    py::class_<corpus::Vocabulary>(m, "Vocabulary")
        .def_static("build", [](const std::string& text) { return corpus::Vocabulary::build(text); })
        .def_property_readonly("size", &corpus::Vocabulary::size)
        .def("encode", [](const corpus::Vocabulary& v, const std::string& s) { return v.encode(s); })
        .def("decode", &corpus::Vocabulary::decode)
        .def("to_text", &corpus::Vocabulary::to_text);

    // ---- tcn ----
    m.def("tcn_preset_names", [] {
        std::vector<std::string> names;
        for (const auto& c : tcn::presets()) names.push_back(c.name);
        return names;
    });
    m.def(
        "receptive_field",
        [](const std::string& preset_name) { return tcn::receptive_field(tcn::preset(preset_name)); },
        py::arg("preset"));
    m.def(
        "receptive_field_of",
        [](int kernel_size, const std::vector<int>& dilations) {
            tcn::TcnConfig cfg;
            cfg.kernel_size = kernel_size;
            cfg.dilations = dilations;
            return tcn::receptive_field(cfg);
        },
        py::arg("kernel_size"), py::arg("dilations"));

    // ---- coverage / toy target ----
    m.def("toy_target_execute",
          [](const std::string& html) { return to_py(cov::toy_target_execute(html)); });
    m.def("toy_baseline_probes", [] { return to_py(cov::toy_baseline_probes()); });
    m.def("toy_probe_count", &cov::toy_probe_count);

    m.def("coverage_union", [](const std::vector<std::set<PyBlock>>& sets) {
        std::vector<cov::CoverageSet> native;
        for (const auto& s : sets) native.push_back(from_py(s));
        return to_py(cov::coverage_union(native));
    });
    m.def("coverage_unique", [](const std::set<PyBlock>& a, const std::set<PyBlock>& b) {
        return to_py(cov::coverage_unique(from_py(a), from_py(b)));
    });

    m.def("parse_drcov", [](py::bytes data) {
        std::string raw = data;
        cov::DrcovData d = cov::parse_drcov(Bytes(raw.begin(), raw.end()));
        std::vector<std::tuple<uint16_t, uint64_t, uint64_t, std::string>> modules;
        for (const auto& mod : d.modules) modules.emplace_back(mod.id, mod.base, mod.end, mod.path);
        return py::make_tuple(to_py(d.blocks), modules);
    });
    m.def(
        "emit_drcov",
        [](const std::set<PyBlock>& blocks,
           const std::vector<std::tuple<uint16_t, uint64_t, uint64_t, std::string>>& modules) {
            std::vector<cov::DrcovModule> native;
            for (const auto& [id, base, end, path] : modules) native.push_back({id, base, end, path});
            Bytes out = cov::emit_drcov(from_py(blocks), native);
            return py::bytes(reinterpret_cast<const char*>(out.data()), out.size());
        },
        py::arg("blocks"), py::arg("modules"));

    // ---- analysis ----
    m.def("kl_divergence", &analysis::kl_divergence, py::arg("p"), py::arg("q"),
          py::arg("smoothing") = 1e-9);
    m.def(
        "policy_similarity_matrix",
        [](const std::vector<std::vector<uint64_t>>& count_rows, double smoothing) {
            std::vector<analysis::PolicyHistogram> hists;
            for (const auto& counts : count_rows) {
                analysis::PolicyHistogram h;
                for (size_t i = 0; i < counts.size(); ++i)
                    h.action_names.push_back("a" + std::to_string(i));
                h.counts = counts;
                hists.push_back(std::move(h));
            }
            return analysis::policy_similarity_matrix(hists, smoothing);
        },
        py::arg("count_rows"), py::arg("smoothing") = 1e-9);

    // ---- ddqn primitives ----
    m.def(
        "select_action",
        [](const std::vector<double>& q, double epsilon, uint64_t seed) {
            Rng rng(seed);
            return ddqn::select_action(q, epsilon, rng);
        },
        py::arg("q"), py::arg("epsilon"), py::arg("seed") = 0);

    m.def(
        "double_q_target",
        [](const std::vector<std::tuple<std::vector<int>, int, double, std::vector<int>, bool>>& batch,
           const std::function<std::vector<double>(std::vector<int>)>& online,
           const std::function<std::vector<double>(std::vector<int>)>& target, double gamma) {
            std::vector<ddqn::Experience> native;
            for (const auto& [s, a, r, s2, t] : batch) native.push_back({s, a, r, s2, t});
            return ddqn::double_q_target(
                native, [&](const corpus::EncodedSequence& s) { return online(s); },
                [&](const corpus::EncodedSequence& s) { return target(s); }, gamma);
        },
        py::arg("batch"), py::arg("online"), py::arg("target"), py::arg("gamma"));

    py::class_<ddqn::PrioritizedReplay>(m, "PrioritizedReplay")
        .def(py::init<size_t, double, double>(), py::arg("capacity"), py::arg("alpha"),
             py::arg("eps_p") = 1e-6)
        .def("insert",
             [](ddqn::PrioritizedReplay& mem, const std::vector<int>& state, int action,
                double reward, const std::vector<int>& next_state, bool terminal) {
                 return mem.insert({state, action, reward, next_state, terminal});
             })
        .def("sample",
             [](const ddqn::PrioritizedReplay& mem, size_t batch_size, double beta, uint64_t seed) {
                 Rng rng(seed);
                 auto batch = mem.sample(batch_size, beta, rng);
                 return py::make_tuple(batch.indices, batch.weights);
             },
             py::arg("batch_size"), py::arg("beta"), py::arg("seed") = 0)
        .def("update_priorities", &ddqn::PrioritizedReplay::update_priorities)
        .def("sample_probability", &ddqn::PrioritizedReplay::sample_probability)
        .def("priority", &ddqn::PrioritizedReplay::priority)
        .def_property_readonly("size", &ddqn::PrioritizedReplay::size);
}

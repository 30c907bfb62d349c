#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gapkit/adapter_io.hpp"
#include "gapkit/analysis.hpp"
#include "gapkit/conditions.hpp"
#include "gapkit/embedstore.hpp"
#include "gapkit/errors.hpp"
#include "gapkit/geometry.hpp"
#include "gapkit/promptgen.hpp"
#include "gapkit/reports.hpp"
#include "gapkit/transferlab.hpp"

namespace py = pybind11;
using namespace gapkit;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

EmbeddingMatrix ToEmbedding(const F32Array& a, const char* what) {
  if (a.ndim() != 2) throw ParameterError(std::string(what) + " must be a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto dim = static_cast<std::size_t>(a.shape(1));
  return EmbeddingMatrix(rows, dim, std::vector<float>(a.data(), a.data() + a.size()));
}

F32Array FromEmbedding(const EmbeddingMatrix& m) {
  F32Array out({m.rows(), m.dim()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

RowMatrix ToRows(const F64Array& a) {
  if (a.ndim() != 2) throw ParameterError("rows must be a 2-D array");
  RowMatrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data());
  return m;
}

F64Array FromRows(const RowMatrix& m) {
  F64Array out({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

PairedCorpus MakeCorpus(const F32Array& text, const F32Array& image,
                        std::optional<std::vector<std::string>> ids,
                        std::optional<std::vector<std::int32_t>> labels,
                        std::optional<std::vector<std::string>> captions) {
  PairedCorpus c;
  c.text = ToEmbedding(text, "text");
  c.image = ToEmbedding(image, "image");
  if (ids) {
    c.ids = std::move(*ids);
  } else {
    for (std::size_t i = 0; i < c.text.rows(); ++i) c.ids.push_back(std::to_string(i));
  }
  c.labels = std::move(labels);
  c.captions = std::move(captions);
  RequireValid(c);
  return c;
}

TrainConfig TrainFrom(const std::string& text) {
  return text.empty() ? TrainConfig{} : TrainConfigFromJson(json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Modality-gap measurement and adaptation toolkit";

  py::register_exception<Error>(m, "GapkitError", PyExc_ValueError);

  py::class_<PairedCorpus>(m, "Corpus")
      .def(py::init(&MakeCorpus), py::arg("text"), py::arg("image"), py::arg("ids") = py::none(),
           py::arg("labels") = py::none(), py::arg("captions") = py::none())
      .def_property_readonly("text", [](const PairedCorpus& c) { return FromEmbedding(c.text); })
      .def_property_readonly("image", [](const PairedCorpus& c) { return FromEmbedding(c.image); })
      .def_readonly("ids", &PairedCorpus::ids)
      .def_readonly("labels", &PairedCorpus::labels)
      .def_readonly("captions", &PairedCorpus::captions)
      .def_property_readonly("rows", &PairedCorpus::rows)
      .def_property_readonly("dim", &PairedCorpus::dim)
      .def("select", [](const PairedCorpus& c, std::vector<std::size_t> idx) { return c.Select(idx); })
      .def("__len__", &PairedCorpus::rows)
      .def("__eq__", [](const PairedCorpus& a, const PairedCorpus& b) { return a == b; });

  m.def("load_corpus", [](const std::filesystem::path& p) { return LoadCorpus(p); });
  m.def("save_corpus", &SaveCorpus, py::arg("corpus"), py::arg("path"));
  m.def("encode_corpus", [](const PairedCorpus& c) {
    const auto bytes = EncodeCorpus(c);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_corpus", [](const py::bytes& b) {
    const std::string s = b;
    return DecodeCorpus({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  });
  m.def("_validate", [](const PairedCorpus& c) { return ToJson(ValidateCorpus(c)).dump(); });

  m.def("_gap_stats",
        [](const PairedCorpus& c, std::size_t samples, std::uint64_t seed, bool vector) {
          return ToJson(GapStats(c, samples, seed), vector).dump();
        });
  m.def("_recall_at_k",
        [](const PairedCorpus& c, std::size_t k, const std::string& pipeline, std::uint64_t seed) {
          if (pipeline.empty()) return RetrievalRecallAtK(c, k, nullptr, seed);
          const AdapterPipeline p = PipelineFromJson(json::parse(pipeline));
          return RetrievalRecallAtK(c, k, &p, seed);
        });

  m.def("_fit_mean_shift", [](const PairedCorpus& c) { return AdapterToJson(FitMeanShift(c)).dump(); });
  m.def("_fit_linear", [](const PairedCorpus& c, double lambda) {
    return AdapterToJson(FitLinear(c, lambda)).dump();
  });
  m.def("_fit_covariance_noise", [](const PairedCorpus& c, double jitter, double scale) {
    return AdapterToJson(FitCovarianceNoise(c, jitter, scale)).dump();
  });
  m.def("_apply_pipeline", [](const F64Array& rows, const std::string& pipeline, std::uint64_t seed) {
    const AdapterPipeline p = PipelineFromJson(json::parse(pipeline));
    Rng rng(DeriveSeed(seed, "apply"));
    return FromRows(ApplyPipelineRows(ToRows(rows), p, rng));
  });
  m.def("difference_vectors", [](const PairedCorpus& c) { return FromRows(DifferenceVectors(c)); });

  m.def("_diff_pca", [](const PairedCorpus& c, std::size_t n, bool components) {
    return ToJson(DiffPca(c, n), components).dump();
  });
  m.def("_feature_correlations", [](const PairedCorpus& c, std::size_t top) {
    return ToJson(FeatureCorrelations(c, top)).dump();
  });
  m.def("_sensitivity",
        [](const PairedCorpus& c, const std::vector<std::string>& names, double noise,
           std::size_t runs, std::uint64_t seed, const std::string& train) {
          std::vector<ShiftCondition> conds;
          for (const auto& n : names) conds.push_back(ShiftCondition::Parse(n));
          return ToJson(SensitivitySweep(c, conds, noise, runs, seed, TrainFrom(train))).dump();
        });

  m.def("_synthesize", [](const std::string& spec) {
    return GenerateSyntheticCorpus(SyntheticSpecFromJson(json::parse(spec)));
  });
  m.def("_transfer",
        [](const PairedCorpus& c, const std::string& conditions, const std::string& train,
           std::vector<std::uint64_t> seeds) {
          const auto conds = ParseConditionList(conditions);
          return ToJson(CrossModalExperiment(c, conds, TrainFrom(train), seeds)).dump();
        });

  py::class_<UnigramSampler>(m, "UnigramSampler")
      .def(py::init<WordCounts, std::uint64_t>(), py::arg("target_counts"), py::arg("seed"))
      .def_static("from_captions",
                  [](const std::vector<std::string>& captions, std::uint64_t seed, bool stopwords) {
                    return BuildTargetDistribution(captions, stopwords ? DefaultStopwords() : WordSet{},
                                                   seed);
                  },
                  py::arg("captions"), py::arg("seed"), py::arg("stopwords") = true)
      .def("sample", &UnigramSampler::Sample, py::arg("k") = 2)
      .def("deficit", &UnigramSampler::Deficit, py::arg("word"), py::arg("k") = 2)
      .def("target_share", &UnigramSampler::TargetShare)
      .def_property_readonly("target_counts", &UnigramSampler::target_counts)
      .def_property_readonly("generated_counts", &UnigramSampler::generated_counts)
      .def_property_readonly("total_generated", &UnigramSampler::total_generated);

  m.def("tokenize", &Tokenize);
  m.def("contains_keywords", &ContainsKeywords);
  m.def("build_prompt",
        [](const std::string& instruction,
           const std::vector<std::tuple<std::string, std::string, std::string>>& examples,
           const std::array<std::string, 2>& target, std::uint64_t seed) {
          PromptSpec spec;
          spec.instruction = instruction;
          for (const auto& [k1, k2, cap] : examples) spec.examples.push_back({{k1, k2}, cap});
          spec.target_keywords = target;
          Rng rng(DeriveSeed(seed, "prompt-build/shuffle"));
          return BuildPrompt(spec, rng);
        },
        py::arg("instruction"), py::arg("examples"), py::arg("target"), py::arg("seed"));
  m.def("_filter_candidates",
        [](const std::vector<std::string>& candidates, const std::vector<std::string>& keywords,
           std::uint64_t seed) {
          Rng rng(DeriveSeed(seed, "prompt-filter"));
          const FilterResult r = FilterCandidates(candidates, keywords, rng);
          return py::make_tuple(r.chosen, r.index, r.contains_keywords);
        });
  m.def("_keyword_stats", [](const std::vector<std::vector<bool>>& results) {
    return ToJson(KeywordSuccessStats(results)).dump();
  });
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "glk/glk.hpp"

namespace py = pybind11;
using namespace glk;

namespace {

using LabelArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

LabelMap to_labelmap(const LabelArray& a) {
  if (a.ndim() != 2) throw py::value_error("label map must be a 2-D array (height, width)");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  std::vector<InstanceId> ids(static_cast<std::size_t>(a.size()));
  const std::int64_t* p = a.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (p[i] < 0 || p[i] > static_cast<std::int64_t>(kMaxStoredId))
      throw py::value_error("label values must lie in [0, 65535]");
    ids[i] = static_cast<InstanceId>(p[i]);
  }
  return LabelMap(w, h, std::move(ids));
}

py::array_t<std::uint32_t> from_labelmap(const LabelMap& m) {
  py::array_t<std::uint32_t> out({m.height(), m.width()});
  std::copy(m.ids().begin(), m.ids().end(), out.mutable_data());
  return out;
}

std::vector<LabelMap> to_labelmaps(const std::vector<LabelArray>& arrays) {
  std::vector<LabelMap> out;
  out.reserve(arrays.size());
  for (const auto& a : arrays) out.push_back(to_labelmap(a));
  return out;
}

SoftMaskStack to_stack(const FloatArray& a) {
  if (a.ndim() != 3) throw py::value_error("mask stack must be a 3-D array (n, height, width)");
  std::vector<double> v(a.data(), a.data() + a.size());
  return SoftMaskStack(static_cast<std::size_t>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                       std::move(v));
}

py::array_t<double> from_grid(const Grid3& g) {
  py::array_t<double> out({g.height(), g.width(), g.depth()});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

py::array_t<double> from_matrix(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Matrix to_matrix(const FloatArray& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

py::array_t<double> params_array(const GuideBank& b) {
  py::array_t<double> out({b.size(), std::size_t{3}});
  auto r = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < b.size(); ++i) {
    r(i, 0) = b.params[i].freq_x;
    r(i, 1) = b.params[i].freq_y;
    r(i, 2) = b.params[i].phase;
  }
  return out;
}

GuideBank make_bank(const FloatArray& params, int width, int height, double epsilon) {
  if (params.ndim() != 2 || params.shape(1) != 3) throw py::value_error("params must have shape (d_g, 3)");
  GuideBank b;
  b.width = width;
  b.height = height;
  b.epsilon = epsilon;
  auto r = params.unchecked<2>();
  for (py::ssize_t i = 0; i < params.shape(0); ++i) b.params.push_back({r(i, 0), r(i, 1), r(i, 2)});
  b.validate();
  return b;
}

py::object json_to_python(const std::string& text) {
  return py::module_::import("json").attr("loads")(text);
}

std::optional<SizeThresholds> thresholds_from(const py::object& sizes) {
  if (sizes.is_none()) return std::nullopt;
  if (py::isinstance<py::str>(sizes)) {
    const auto s = sizes.cast<std::string>();
    if (s == "msu") return SizeThresholds::msu();
    if (s == "komatsuna") return SizeThresholds::komatsuna();
    throw py::value_error("sizes must be 'msu', 'komatsuna', a (small_max, medium_max) pair or None");
  }
  const auto t = sizes.cast<std::pair<std::size_t, std::size_t>>();
  SizeThresholds th{t.first, t.second};
  th.validate();
  return th;
}

}  // namespace

PYBIND11_MODULE(_glk, m) {
  m.doc() = "Harmonic guide functions, guided encodings and leaf segmentation metrics";

  auto base = py::register_exception<Error>(m, "GlkError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DegenerateDatasetError>(m, "DegenerateDatasetError", base.ptr());
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", base.ptr());
  py::register_exception<EmptyInstanceError>(m, "EmptyInstanceError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<GenerationError>(m, "GenerationError", base.ptr());

  py::class_<GuideBank>(m, "GuideBank")
      .def(py::init(&make_bank), py::arg("params"), py::arg("width"), py::arg("height"), py::arg("epsilon") = 2.0)
      .def_property_readonly("params", &params_array, "Array of shape (d_g, 3): freq_x, freq_y, phase")
      .def_readonly("width", &GuideBank::width)
      .def_readonly("height", &GuideBank::height)
      .def_readonly("epsilon", &GuideBank::epsilon)
      .def("__len__", &GuideBank::size)
      .def("to_json", &guide_bank_to_json)
      .def_static("from_json", [](const std::string& s) { return guide_bank_from_json(s); })
      .def("save", [](const GuideBank& b, const std::filesystem::path& p) { save_guide_bank(b, p); })
      .def_static("load", &load_guide_bank)
      .def("__repr__", [](const GuideBank& b) {
        return "GuideBank(d_g=" + std::to_string(b.size()) + ", width=" + std::to_string(b.width) +
               ", height=" + std::to_string(b.height) + ")";
      });

  m.def("init_guides", &init_guides, py::arg("d_g"), py::arg("width"), py::arg("height"), py::arg("epsilon") = 2.0,
        py::arg("seed") = 0);

  m.def(
      "guided_embeddings",
      [](const GuideBank& bank, const LabelArray& labels) {
        const LabelMap map = to_labelmap(labels);
        py::dict out;
        for (const auto& s : instances_of(map)) {
          const auto e = guided_embedding(bank, s).values;
          out[py::int_(s.id)] = py::array_t<double>(static_cast<py::ssize_t>(e.size()), e.data());
        }
        return out;
      },
      py::arg("bank"), py::arg("labels"), "Map instance id -> guided embedding, ids ascending");

  m.def(
      "separation_loss",
      [](const GuideBank& bank, const std::vector<LabelArray>& images) {
        const auto maps = to_labelmaps(images);
        return separation_loss(bank, std::span<const LabelMap>(maps));
      },
      py::arg("bank"), py::arg("images"));

  m.def(
      "separation_loss_grad",
      [](const GuideBank& bank, const std::vector<LabelArray>& images) {
        const auto maps = to_labelmaps(images);
        const auto g = separation_loss_grad(bank, maps);
        GuideBank as_bank = bank;
        as_bank.params = g;
        return params_array(as_bank);
      },
      py::arg("bank"), py::arg("images"), "Gradient as an array of shape (d_g, 3)");

  m.def(
      "train_guides",
      [](const std::vector<LabelArray>& images, std::size_t d_g, double epsilon, std::size_t epochs, double learning_rate,
         std::uint64_t seed) {
        const auto maps = to_labelmaps(images);
        if (maps.empty()) throw DegenerateDatasetError("no images");
        GuideTrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        const auto init = init_guides(d_g, maps.front().width(), maps.front().height(), epsilon, seed);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train_guides(maps, cfg, init);
        }
        return py::make_tuple(r.bank, r.history, r.best_epoch);
      },
      py::arg("images"), py::arg("d_g") = 16, py::arg("epsilon") = 2.0, py::arg("epochs") = 1000,
      py::arg("learning_rate") = 0.01, py::arg("seed") = 0, "Returns (bank, loss history, best epoch)");

  m.def("spe", [](int h, int w, int d_p) { return from_grid(spe(h, w, d_p)); }, py::arg("h"), py::arg("w"), py::arg("d_p"));
  m.def(
      "gpe", [](const GuideBank& bank, int h, int w, int d_p) { return from_grid(gpe(bank, h, w, d_p)); }, py::arg("bank"),
      py::arg("h"), py::arg("w"), py::arg("d_p"));

  m.def(
      "guided_mask_embeddings",
      [](const GuideBank& bank, const FloatArray& masks) { return from_matrix(guided_mask_embeddings(bank, to_stack(masks))); },
      py::arg("bank"), py::arg("masks"));

  py::class_<MlpParams>(m, "Mlp")
      .def(py::init(&init_mlp), py::arg("d_in"), py::arg("d_hidden"), py::arg("d_out"), py::arg("seed") = 0)
      .def_property_readonly("input_dim", &MlpParams::input_dim)
      .def_property_readonly("output_dim", &MlpParams::output_dim)
      .def("__call__", [](const MlpParams& p, const FloatArray& x) { return from_matrix(mlp_forward(p, to_matrix(x))); })
      .def("to_json", &mlp_to_json)
      .def_static("from_json", [](const std::string& s) { return mlp_from_json(s); });

  m.def(
      "gdpq",
      [](const GuideBank& bank, const FloatArray& masks, const MlpParams& mlp, std::optional<std::vector<double>> bias) {
        const QueryBias b{bias.value_or(std::vector<double>(bank.size(), 0.0))};
        return from_matrix(gdpq(bank, to_stack(masks), mlp, b));
      },
      py::arg("bank"), py::arg("masks"), py::arg("mlp"), py::arg("bias") = py::none());

  m.def(
      "best_dice",
      [](const LabelArray& from, const LabelArray& to) {
        return best_dice(instances_of(to_labelmap(from)), instances_of(to_labelmap(to)));
      },
      py::arg("pred"), py::arg("gt"));
  m.def(
      "sbd",
      [](const LabelArray& pred, const LabelArray& gt) {
        return sbd(instances_of(to_labelmap(pred)), instances_of(to_labelmap(gt)));
      },
      py::arg("pred"), py::arg("gt"));
  m.def(
      "dic",
      [](const LabelArray& pred, const LabelArray& gt) {
        return dic(instances_of(to_labelmap(pred)), instances_of(to_labelmap(gt)));
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "evaluate",
      [](const std::vector<LabelArray>& preds, const std::vector<LabelArray>& gts, const py::object& sizes) {
        if (preds.size() != gts.size()) throw py::value_error("preds and gts differ in length");
        std::vector<EvalPair> pairs;
        for (std::size_t i = 0; i < gts.size(); ++i) {
          const LabelMap p = to_labelmap(preds[i]), g = to_labelmap(gts[i]);
          if (p.width() != g.width() || p.height() != g.height()) throw ShapeError("image " + std::to_string(i) + " sizes differ");
          pairs.push_back({std::to_string(i), instances_of(p), g});
        }
        const auto th = thresholds_from(sizes);
        return json_to_python(report_to_json(evaluate_dataset(pairs, th)));
      },
      py::arg("preds"), py::arg("gts"), py::arg("sizes") = py::none(), "Metrics report as a dict");

  m.def("dice_loss", [](const std::vector<double>& p, const std::vector<double>& g) { return dice_loss(p, g); },
        py::arg("pred"), py::arg("gt"));
  m.def("bce_loss", [](const std::vector<double>& p, const std::vector<double>& g) { return bce_loss(p, g); },
        py::arg("pred"), py::arg("gt"));
  m.def(
      "total_loss",
      [](double guide_l1, double mask_ce, double mask_dice, double cls, double w_guide, double w_ce, double w_dice,
         double w_cls) {
        LossWeights w;
        w.lambda_guide = w_guide;
        w.lambda_ce = w_ce;
        w.lambda_dice = w_dice;
        w.lambda_cls = w_cls;
        return total_loss({guide_l1, mask_ce, mask_dice, cls}, w);
      },
      py::arg("guide_l1"), py::arg("mask_ce"), py::arg("mask_dice"), py::arg("cls"), py::arg("w_guide") = 5.0,
      py::arg("w_ce") = 2.0, py::arg("w_dice") = 5.0, py::arg("w_cls") = 2.0);

  m.def(
      "generate_plant",
      [](std::uint64_t seed, int width, int height, int n_min, int n_max, double growth, bool occlusion) {
        RosetteConfig cfg;
        cfg.width = width;
        cfg.height = height;
        cfg.n_min = n_min;
        cfg.n_max = n_max;
        cfg.growth = growth;
        cfg.occlusion = occlusion;
        return from_labelmap(generate_plant(cfg, seed));
      },
      py::arg("seed"), py::arg("width") = 96, py::arg("height") = 96, py::arg("n_min") = 3, py::arg("n_max") = 6,
      py::arg("growth") = 1.2, py::arg("occlusion") = true);

  m.def(
      "perturb",
      [](const LabelArray& labels, double drop, double merge, int radius, std::uint64_t seed) {
        return from_labelmap(stack_to_labelmap(perturb(to_labelmap(labels), PerturbSpec{drop, merge, radius, seed})));
      },
      py::arg("labels"), py::arg("drop") = 0.0, py::arg("merge") = 0.0, py::arg("radius") = 0, py::arg("seed") = 0);

  m.def("load_labelmap", [](const std::filesystem::path& p) { return from_labelmap(load_labelmap(p)); });
  m.def("save_labelmap", [](const LabelArray& a, const std::filesystem::path& p) { save_labelmap(to_labelmap(a), p); });
  m.def("set_thread_limit", &set_thread_limit, py::arg("n"));
}

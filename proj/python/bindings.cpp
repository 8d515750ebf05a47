#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ot2m/ar/model.hpp"
#include "ot2m/curation/concat.hpp"
#include "ot2m/curation/filter.hpp"
#include "ot2m/curation/plausibility.hpp"
#include "ot2m/data/render.hpp"
#include "ot2m/data/synth.hpp"
#include "ot2m/error.hpp"
#include "ot2m/metrics/metrics.hpp"
#include "ot2m/nn/gradcheck_suite.hpp"
#include "ot2m/prq/model.hpp"
#include "ot2m/prq/tokenizer.hpp"

namespace py = pybind11;
using namespace ot2m;

namespace {

using TokenArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

TokenArray grid_to_array(const prq::TokenGrid& g) {
  TokenArray out({g.steps(), g.parts(), g.layers()});
  std::copy(g.data().begin(), g.data().end(), out.mutable_data());
  return out;
}

prq::TokenGrid array_to_grid(const TokenArray& a) {
  if (a.ndim() != 3) throw Error(ErrorKind::ShapeMismatch, "token array must be (steps, parts, layers)");
  const auto s = static_cast<std::size_t>(a.shape(0)), p = static_cast<std::size_t>(a.shape(1)),
             l = static_cast<std::size_t>(a.shape(2));
  return prq::TokenGrid(s, p, l, std::vector<std::uint32_t>(a.data(), a.data() + a.size()));
}

py::dict loss_dict(const prq::LossBreakdown& l) {
  py::dict d;
  d["total"] = l.total;
  d["whole_body"] = l.whole_body;
  d["parts"] = l.parts;
  d["commitment"] = l.commitment;
  d["codes_reset"] = l.codes_reset;
  d["grad_norm"] = l.grad_norm;
  d["lr"] = l.lr;
  return d;
}

prq::TokenizerConfig tokenizer_config(const py::kwargs& kw) {
  prq::TokenizerConfig c;
  for (const auto& [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "alpha") c.alpha = value.cast<std::size_t>();
    else if (k == "layers") c.layers = value.cast<std::size_t>();
    else if (k == "codebook_size") c.codebook_size = value.cast<std::size_t>();
    else if (k == "latent_dim") c.latent_dim = value.cast<std::size_t>();
    else if (k == "beta") c.beta = value.cast<double>();
    else if (k == "width") c.width = value.cast<std::size_t>();
    else if (k == "learning_rate") c.learning_rate = value.cast<double>();
    else if (k == "batch_size") c.batch_size = value.cast<std::size_t>();
    else if (k == "crop_frames") c.crop_frames = value.cast<std::size_t>();
    else if (k == "warmup_steps") c.warmup_steps = value.cast<std::size_t>();
    else if (k == "final_lr_fraction") c.final_lr_fraction = value.cast<double>();
    else if (k == "grad_clip") c.grad_clip = value.cast<double>();
    else if (k == "seed") c.seed = value.cast<std::uint64_t>();
    else throw Error(ErrorKind::InvalidArgument, "unknown tokenizer option '" + k + "'");
  }
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Motion curation, part-grid residual tokenizer and text-to-motion toolkit";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.attr("FEATURE_DIM") = Skeleton::body().feature_dim();
  m.attr("NUM_JOINTS") = Skeleton::body().num_joints();

  py::class_<MotionSequence>(m, "Motion")
      .def(py::init([](const FrameMatrix& frames, double fps) { return MotionSequence(frames, fps); }),
           py::arg("frames"), py::arg("fps") = 20.0)
      .def_property_readonly("frames", &MotionSequence::frames)
      .def_property_readonly("fps", &MotionSequence::fps)
      .def_property_readonly("num_frames", &MotionSequence::num_frames)
      .def("position", [](const MotionSequence& s, std::size_t t, std::size_t j) -> Eigen::Vector3d {
        return s.position(t, j);
      })
      .def("validate", &MotionSequence::validate)
      .def("slice", &MotionSequence::slice)
      .def("__len__", &MotionSequence::num_frames);

  m.def("read_motion", &read_motion);
  m.def("write_motion", &write_motion);
  m.def("transform_motion", [](const MotionSequence& s, double yaw, const Eigen::Vector3d& offset) {
    return transform_motion(s, yaw, offset);
  });
  m.def("split_parts", [](const MotionSequence& s) {
    const PartSet ps = split_parts(s);
    py::array_t<double> out({ps.num_frames(), kNumParts, kPartFeatureDim});
    std::copy(ps.data().begin(), ps.data().end(), out.mutable_data());
    return out;
  });
  m.def("merge_parts", [](py::array_t<double, py::array::c_style | py::array::forcecast> a, double fps) {
    if (a.ndim() != 3 || a.shape(1) != static_cast<py::ssize_t>(kNumParts) ||
        a.shape(2) != static_cast<py::ssize_t>(kPartFeatureDim)) {
      throw Error(ErrorKind::ShapeMismatch, "part array must be (frames, 5, 71)");
    }
    return merge_parts(PartSet(static_cast<std::size_t>(a.shape(0)), std::vector<double>(a.data(), a.data() + a.size())),
                       fps);
  }, py::arg("parts"), py::arg("fps") = 20.0);

  m.def("gen_synthetic", [](std::size_t count, std::size_t min_frames, std::size_t max_frames, double fps,
                            std::uint64_t seed) {
    data::SynthSpec spec{count, min_frames, max_frames, fps, seed};
    py::list out;
    for (auto& c : data::gen_synthetic(spec)) {
      py::dict d;
      d["id"] = c.id;
      d["action"] = c.action;
      d["text"] = c.text;
      d["motion"] = std::move(c.motion);
      out.append(d);
    }
    return out;
  }, py::arg("count") = 16, py::arg("min_frames") = 100, py::arg("max_frames") = 304, py::arg("fps") = 20.0,
     py::arg("seed") = 0);
  m.def("render_svg", [](const MotionSequence& s, std::size_t stride) {
    data::RenderOptions o;
    o.stride = stride;
    return data::render_svg(s, o);
  }, py::arg("motion"), py::arg("stride") = 10);

  m.def("filter_track", [](const std::string& jsonl, const std::string& criteria_json) {
    const auto criteria = criteria_json.empty() ? curation::FilterCriteria{}
                                                : curation::FilterCriteria::from_json(criteria_json);
    const auto r = curation::filter_track(curation::parse_track(jsonl), criteria);
    py::dict d;
    d["accepted"] = r.accepted;
    d["reasons"] = r.reasons;
    d["coverage"] = r.coverage;
    d["frames_below_keypoints"] = r.frames_below_keypoints;
    d["frames_below_bbox"] = r.frames_below_bbox;
    return d;
  }, py::arg("track_jsonl"), py::arg("criteria_json") = "");
  m.def("concat_motions", [](const MotionSequence& a, const MotionSequence& b, std::size_t window, bool align_height) {
    curation::TransitionConfig cfg;
    cfg.window_frames = window;
    cfg.align_height = align_height;
    auto r = curation::concat_motions(a, b, cfg);
    py::dict seam;
    seam["yaw_offset"] = r.seam.yaw_offset;
    seam["max_angular_velocity"] = r.seam.max_angular_velocity;
    seam["max_endpoint_distance"] = r.seam.max_endpoint_distance;
    seam["joint_of_max"] = r.seam.joint_of_max;
    return py::make_tuple(std::move(r.motion), seam);
  }, py::arg("a"), py::arg("b"), py::arg("window") = 8, py::arg("align_height") = false);
  m.def("merge_texts", &curation::merge_texts);
  m.def("score_plausibility", [](const MotionSequence& s) {
    const auto r = curation::score_plausibility(s);
    py::dict d;
    d["foot_slide"] = r.foot_slide;
    d["jitter"] = r.jitter;
    d["penetration"] = r.penetration;
    d["pass"] = r.pass;
    return d;
  });

  m.def("mpjpe", &metrics::mpjpe);
  m.def("frechet_distance",
        py::overload_cast<const Eigen::VectorXd&, const Eigen::MatrixXd&, const Eigen::VectorXd&,
                          const Eigen::MatrixXd&>(&metrics::frechet_distance));
  m.def("fid", &metrics::fid);
  m.def("r_precision", [](const metrics::FeatureMatrix& motion, const metrics::FeatureMatrix& text, std::size_t pool,
                          std::uint64_t seed) {
    const auto r = metrics::r_precision(motion, text, pool, seed);
    return py::make_tuple(r.r_at_1, r.r_at_2, r.r_at_3);
  }, py::arg("motion"), py::arg("text"), py::arg("pool") = 32, py::arg("seed") = 0);
  m.def("mm_dist", &metrics::mm_dist);
  m.def("diversity", &metrics::diversity, py::arg("features"), py::arg("pairs") = 300, py::arg("seed") = 0);
  m.def("motion_features", [](const MotionSequence& s) { return metrics::KinematicExtractor().motion_features(s); });

  py::class_<prq::Tokenizer>(m, "Tokenizer")
      .def(py::init([](const py::kwargs& kw) { return prq::Tokenizer(tokenizer_config(kw)); }))
      .def_static("load", &prq::Tokenizer::load)
      .def("save", &prq::Tokenizer::save)
      .def_property_readonly("layers", [](const prq::Tokenizer& t) { return t.config().layers; })
      .def_property_readonly("codebook_size", [](const prq::Tokenizer& t) { return t.codebook().size(); })
      .def("tokenize", [](const prq::Tokenizer& t, const MotionSequence& s) { return grid_to_array(t.tokenize(s)); })
      .def("detokenize", [](const prq::Tokenizer& t, const TokenArray& a, double fps) {
        return t.detokenize(array_to_grid(a), fps);
      }, py::arg("tokens"), py::arg("fps") = 20.0)
      .def("reconstruct", [](const prq::Tokenizer& t, const MotionSequence& s) {
        auto r = t.reconstruct(s);
        return py::make_tuple(std::move(r.motion), grid_to_array(r.tokens));
      });
  m.def("train_tokenizer", [](prq::Tokenizer& tok, const std::vector<MotionSequence>& corpus, std::size_t steps) {
    py::list out;
    const prq::TrainLog log = [&] {
      py::gil_scoped_release release;
      return prq::train_tokenizer(tok, corpus, steps);
    }();
    for (const auto& s : log.steps) out.append(loss_dict(s));
    return out;
  });
  m.def("write_tokens", [](const std::filesystem::path& p, const TokenArray& a, std::size_t codebook_size) {
    prq::write_tokens(p, array_to_grid(a), codebook_size);
  });
  m.def("read_tokens", [](const std::filesystem::path& p) { return grid_to_array(prq::read_tokens(p)); });

  py::class_<ar::ArModel>(m, "ArModel")
      .def_static("load", &ar::ArModel::load)
      .def("save", &ar::ArModel::save)
      .def_property_readonly("token_layers", [](const ar::ArModel& a) { return a.config().token_layers; });
  m.def("generate", [](const ar::ArModel& model, const std::string& text, std::size_t top_k, double temperature,
                       std::uint64_t seed, std::size_t max_steps) {
    ar::SamplingOptions o;
    o.top_k = top_k;
    o.temperature = temperature;
    o.seed = seed;
    o.max_steps = max_steps;
    return grid_to_array(ar::generate(model, text, model.config().token_layers, o));
  }, py::arg("model"), py::arg("text"), py::arg("top_k") = 0, py::arg("temperature") = 1.0, py::arg("seed") = 0,
     py::arg("max_steps") = 0);

  m.def("gradcheck", [](std::size_t instances, std::uint64_t seed) {
    auto cases = nn::primitive_gradcheck_cases();
    cases.push_back(prq::part_merge_gradcheck_case());
    py::dict out;
    for (const auto& r : nn::run_gradchecks(cases, instances, seed)) out[py::str(r.name)] = r.max_error;
    return out;
  }, py::arg("instances") = 20, py::arg("seed") = 0);
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evobj/commands.hpp"
#include "evobj/dataset.hpp"
#include "evobj/discern.hpp"
#include "evobj/eval.hpp"
#include "evobj/pointio.hpp"
#include "evobj/prior.hpp"
#include "evobj/scenegen.hpp"

namespace py = pybind11;
using namespace evobj;

namespace {

PointCloud cloud_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2 || arr.shape(1) != 3)
    throw InvalidArgument("expected an (N, 3) float array");
  PointCloud cloud;
  const auto r = arr.unchecked<2>();
  cloud.points.reserve(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i)
    cloud.points.push_back({r(i, 0), r(i, 1), r(i, 2)});
  return cloud;
}

py::array_t<double> cloud_to_array(const PointCloud& cloud) {
  py::array_t<double> arr({static_cast<py::ssize_t>(cloud.size()), py::ssize_t(3)});
  auto w = arr.mutable_unchecked<2>();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    w(i, 0) = cloud.points[i].x;
    w(i, 1) = cloud.points[i].y;
    w(i, 2) = cloud.points[i].z;
  }
  return arr;
}

}  // namespace

PYBIND11_MODULE(_evobj, m) {
  m.doc() = "unsupervised object discovery on synthetic scene point clouds";

  py::register_exception<InvalidArgument>(m, "InvalidArgumentError", PyExc_ValueError);
  py::register_exception<DegenerateInput>(m, "DegenerateInputError", PyExc_ValueError);
  py::register_exception<CandidateTooSmall>(m, "CandidateTooSmallError", PyExc_ValueError);

  m.def("chamfer", [](py::array_t<double> a, py::array_t<double> b) {
    return chamfer(cloud_from_array(a), cloud_from_array(b));
  });
  m.def("one_sided_chamfer", [](py::array_t<double> src, py::array_t<double> dst) {
    return one_sided_chamfer(cloud_from_array(src), cloud_from_array(dst));
  });
  m.def("mask_iou", [](const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    return mask_iou(a, b);
  });
  m.def("nearest_neighbor", [](py::array_t<double> q, py::array_t<double> cloud) {
    const PointCloud c = cloud_from_array(cloud);
    const auto r = q.unchecked<1>();
    const auto hit = nearest_neighbor({r(0), r(1), r(2)}, c);
    return py::make_tuple(hit.index, hit.distance);
  });
  m.def("crop_cylinder",
        [](py::array_t<double> scene, double cx, double cy, double radius, double z_min,
           double z_max) {
          const auto subset =
              crop_cylinder(cloud_from_array(scene), ContainerPose{cx, cy, radius, z_min, z_max});
          return subset.parent_indices;
        });
  m.def("downsample_random", [](py::array_t<double> cloud, std::uint32_t n, std::uint64_t seed) {
    return cloud_to_array(downsample_random(cloud_from_array(cloud), n, seed));
  });
  m.def("normalize_to_unit", [](py::array_t<double> cloud) {
    const auto [normalized, t] = normalize_to_unit(cloud_from_array(cloud));
    return py::make_tuple(cloud_to_array(normalized),
                          py::make_tuple(t.translation.x, t.translation.y, t.translation.z,
                                         t.uniform_scale, t.yaw));
  });

  m.def("gen_template", [](const std::string& category, std::uint64_t seed) {
    const ShapeTemplate tpl = gen_template(category_from_string(category), seed);
    return py::make_tuple(tpl.template_id, cloud_to_array(tpl.surface_points));
  });
  m.def("render_partial",
        [](py::array_t<double> points, double distance, double pitch_deg, double azimuth_deg,
           double fov_deg, std::uint32_t resolution) {
          CameraConfig cam{distance, pitch_deg, azimuth_deg, fov_deg, resolution};
          const PointCloud c = cloud_from_array(points);
          return render_partial_indices(c.points, cam);
        },
        py::arg("points"), py::arg("distance") = 2.0, py::arg("pitch_deg") = 0.0,
        py::arg("azimuth_deg") = 0.0, py::arg("fov_deg") = 20.0, py::arg("resolution") = 128);
  m.def("compose_scene",
        [](const std::string& category_list, std::uint32_t per_category, std::uint64_t seed) {
          RunConfig cfg = RunConfig::defaults();
          cfg.set("categories", category_list);
          const ShapeLibrary lib = build_library(categories_from(cfg), per_category, seed);
          const auto scene = compose_scene(lib.train, SceneGenConfig{}, seed);
          if (!scene) return py::make_tuple(py::none(), py::none());
          py::array_t<std::uint32_t> ids(static_cast<py::ssize_t>(scene->cloud.size()));
          auto w = ids.mutable_unchecked<1>();
          for (std::size_t i = 0; i < scene->cloud.size(); ++i)
            w(i) = scene->cloud.instance_ids[i];
          return py::make_tuple(cloud_to_array(scene->cloud), ids);
        });

  m.def("bce_loss", &bce_loss);
  m.def("ppo_loss", &ppo_loss);
  m.def("objectness",
        [](py::array_t<double> candidate, py::array_t<double> template_points,
           std::uint32_t yaw_bins, double cd_threshold, double tau) {
          ShapeTemplate tpl;
          tpl.template_id = "py_template";
          tpl.surface_points = cloud_from_array(template_points);
          PriorConfig pc;
          pc.yaw_bins = yaw_bins;
          pc.cd_threshold = cd_threshold;
          pc.tau = tau;
          const PriorLibrary lib({tpl}, pc);
          const auto res = objectness_score(cloud_from_array(candidate), lib);
          return py::make_tuple(res.score, res.cd, res.valid);
        },
        py::arg("candidate"), py::arg("template_points"), py::arg("yaw_bins") = 36,
        py::arg("cd_threshold") = 0.1, py::arg("tau") = 0.05);

  m.def("evaluate_ap", [](const std::vector<py::dict>& predictions,
                          const std::map<std::uint32_t, std::vector<std::vector<std::uint32_t>>>&
                              ground_truth) {
    std::vector<InstancePrediction> preds;
    for (const auto& p : predictions) {
      InstancePrediction pred;
      pred.scene_id = p["scene_id"].cast<std::uint32_t>();
      pred.indices = p["indices"].cast<std::vector<std::uint32_t>>();
      pred.confidence = p["confidence"].cast<double>();
      preds.push_back(std::move(pred));
    }
    MasksByScene gts;
    for (const auto& [sid, masks] : ground_truth) gts[sid] = masks;
    const EvalReport report = evaluate_ap(preds, gts);
    py::dict out;
    out["ap"] = report.ap;
    out["ap50"] = report.ap50;
    out["ap25"] = report.ap25;
    return out;
  });

  m.def("write_point_cloud", [](const std::string& path, py::array_t<double> cloud) {
    write_point_cloud(path, cloud_from_array(cloud));
  });
  m.def("read_point_cloud", [](const std::string& path) {
    return cloud_to_array(read_point_cloud(path));
  });
}

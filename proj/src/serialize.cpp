#include "nextgrade/serialize.hpp"

#include <stdexcept>

#include <json.hpp>

namespace nextgrade {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json header(const char* kind) {
  return json{{"format_version", kFormatVersion}, {"kind", kind}};
}

json checked_parse(const std::string& text, const char* kind) {
  json j = json::parse(text);
  if (j.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported model format version");
  }
  if (j.at("kind").get<std::string>() != kind) {
    throw std::runtime_error("model kind mismatch: expected " + std::string(kind));
  }
  return j;
}

}  // namespace

std::string to_json(const FmModel& m) {
  json j = header("fm");
  j["columns"] = m.columns;
  j["rank"] = m.rank;
  j["w0"] = m.w0;
  j["w"] = m.w;
  j["v"] = m.v;
  return j.dump();
}

FmModel fm_from_json(const std::string& text) {
  const json j = checked_parse(text, "fm");
  FmModel m;
  m.columns = j.at("columns").get<int>();
  m.rank = j.at("rank").get<int>();
  m.w0 = j.at("w0").get<double>();
  m.w = j.at("w").get<std::vector<double>>();
  m.v = j.at("v").get<std::vector<double>>();
  return m;
}

std::string to_json(const SvdModel& m) {
  json j = header("svd");
  j["rank"] = m.rank;
  j["student_index"] = m.student_index;
  j["course_index"] = m.course_index;
  j["student_factors"] = m.student_factors;
  j["course_factors"] = m.course_factors;
  j["student_courses"] = m.student_courses;
  return j.dump();
}

SvdModel svd_from_json(const std::string& text) {
  const json j = checked_parse(text, "svd");
  SvdModel m;
  m.rank = j.at("rank").get<int>();
  m.student_index = j.at("student_index").get<std::unordered_map<std::string, int>>();
  m.course_index = j.at("course_index").get<std::unordered_map<std::string, int>>();
  m.student_factors = j.at("student_factors").get<std::vector<double>>();
  m.course_factors = j.at("course_factors").get<std::vector<double>>();
  m.student_courses = j.at("student_courses").get<std::vector<std::vector<int>>>();
  return m;
}

std::string to_json(const LinearModel& m) {
  json j = header("linear");
  j["intercept"] = m.intercept;
  j["coef"] = m.coef;
  return j.dump();
}

LinearModel linear_from_json(const std::string& text) {
  const json j = checked_parse(text, "linear");
  LinearModel m;
  m.intercept = j.at("intercept").get<double>();
  m.coef = j.at("coef").get<std::vector<double>>();
  return m;
}

std::string to_json(const ForestModel& m) {
  json j = header("forest");
  j["columns"] = m.columns;
  json trees = json::array();
  for (const Tree& t : m.trees) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
      nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    }
    json gains = json::array();
    for (const SplitGain& g : t.gains) gains.push_back(json::array({g.feature, g.gain}));
    trees.push_back(json{{"nodes", std::move(nodes)}, {"gains", std::move(gains)}});
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

ForestModel forest_from_json(const std::string& text) {
  const json j = checked_parse(text, "forest");
  ForestModel m;
  m.columns = j.at("columns").get<std::size_t>();
  for (const auto& jt : j.at("trees")) {
    Tree t;
    for (const auto& jn : jt.at("nodes")) {
      TreeNode n;
      n.feature = jn.at(0).get<int>();
      n.threshold = jn.at(1).get<double>();
      n.left = jn.at(2).get<int>();
      n.right = jn.at(3).get<int>();
      n.value = jn.at(4).get<double>();
      t.nodes.push_back(n);
    }
    for (const auto& jg : jt.at("gains")) {
      t.gains.push_back({jg.at(0).get<int>(), jg.at(1).get<double>()});
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

std::string to_json(const PmlrModel& m) {
  json j = header("pmlr");
  j["k"] = m.k;
  j["columns"] = m.columns;
  j["w0"] = m.w0;
  j["student_index"] = m.student_index;
  j["course_index"] = m.course_index;
  j["student_bias"] = m.student_bias;
  j["course_bias"] = m.course_bias;
  j["membership"] = m.membership;
  j["coef"] = m.coef;
  return j.dump();
}

PmlrModel pmlr_from_json(const std::string& text) {
  const json j = checked_parse(text, "pmlr");
  PmlrModel m;
  m.k = j.at("k").get<int>();
  m.columns = j.at("columns").get<std::size_t>();
  m.w0 = j.at("w0").get<double>();
  m.student_index = j.at("student_index").get<std::unordered_map<std::string, int>>();
  m.course_index = j.at("course_index").get<std::unordered_map<std::string, int>>();
  m.student_bias = j.at("student_bias").get<std::vector<double>>();
  m.course_bias = j.at("course_bias").get<std::vector<double>>();
  m.membership = j.at("membership").get<std::vector<double>>();
  m.coef = j.at("coef").get<std::vector<double>>();
  return m;
}

std::string to_json(const MeansModel& m) {
  json j = header("means");
  j["global_mean"] = m.global_mean;
  j["student_mean"] = m.student_mean;
  j["course_mean"] = m.course_mean;
  return j.dump();
}

MeansModel means_from_json(const std::string& text) {
  const json j = checked_parse(text, "means");
  MeansModel m;
  m.global_mean = j.at("global_mean").get<double>();
  m.student_mean = j.at("student_mean").get<std::unordered_map<std::string, double>>();
  m.course_mean = j.at("course_mean").get<std::unordered_map<std::string, double>>();
  return m;
}

}  // namespace nextgrade

#include "lipm/problem_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace lipm {

namespace {

Json number_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  if (std::isnan(v)) throw NonFiniteError("cannot serialize NaN");
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw std::invalid_argument("unexpected string in numeric field: " + s);
  }
  if (!j.is_number()) throw std::invalid_argument("expected a number");
  return j.get<double>();
}

const Json& field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw std::invalid_argument(std::string("missing field: ") + name);
  return *it;
}

}  // namespace

Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(number_to_json(v[i]));
  return arr;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number_from_json(j[i]);
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Vector row = vector_from_json(j[static_cast<std::size_t>(i)]);
    if (row.size() != cols) throw std::invalid_argument("ragged matrix rows");
    m.row(i) = row.transpose();
  }
  return m;
}

Json to_json(const NlpInstance& instance) {
  Json j;
  j["n"] = instance.n();
  j["Q0"] = matrix_to_json(instance.Q0());
  j["p0"] = vector_to_json(instance.p0());
  j["sin_term"] = instance.sin_term();
  Json ineq = Json::array();
  for (const auto& c : instance.ineq()) {
    Json jc;
    if (c.Q) jc["Q"] = matrix_to_json(*c.Q);
    jc["p"] = vector_to_json(c.p);
    jc["q"] = number_to_json(c.q);
    ineq.push_back(std::move(jc));
  }
  j["ineq"] = std::move(ineq);
  Json eq = Json::array();
  for (const auto& c : instance.eq()) eq.push_back({{"p", vector_to_json(c.p)}, {"q", number_to_json(c.q)}});
  j["eq"] = std::move(eq);
  j["lower"] = vector_to_json(instance.lower());
  j["upper"] = vector_to_json(instance.upper());
  j["family_tag"] = std::string(to_string(instance.family_tag()));
  return j;
}

NlpInstance instance_from_json(const Json& j) {
  const auto n = field(j, "n").get<Index>();
  Matrix Q0 = matrix_from_json(field(j, "Q0"));
  Vector p0 = vector_from_json(field(j, "p0"));
  if (p0.size() != n) throw std::invalid_argument("p0 length does not match n");
  const bool sin_term = j.value("sin_term", false);

  std::vector<InequalityConstraint> ineq;
  for (const auto& jc : j.value("ineq", Json::array())) {
    InequalityConstraint c;
    if (jc.contains("Q")) c.Q = matrix_from_json(jc["Q"]);
    c.p = vector_from_json(field(jc, "p"));
    c.q = number_from_json(field(jc, "q"));
    ineq.push_back(std::move(c));
  }
  std::vector<EqualityConstraint> eq;
  for (const auto& jc : j.value("eq", Json::array()))
    eq.push_back({vector_from_json(field(jc, "p")), number_from_json(field(jc, "q"))});

  Vector lower = j.contains("lower") ? vector_from_json(j["lower"]) : Vector::Constant(n, -kInf);
  Vector upper = j.contains("upper") ? vector_from_json(j["upper"]) : Vector::Constant(n, kInf);
  const FamilyTag tag = family_tag_from_string(j.value("family_tag", std::string("EXTERNAL")));
  return NlpInstance(std::move(Q0), std::move(p0), sin_term, std::move(ineq), std::move(eq),
                     std::move(lower), std::move(upper), tag);
}

Json to_json(const Dataset& dataset) {
  Json j;
  j["split"] = {dataset.train_end, dataset.val_end};
  Json arr = Json::array();
  for (const auto& inst : dataset.instances) arr.push_back(to_json(inst));
  j["instances"] = std::move(arr);
  return j;
}

Dataset dataset_from_json(const Json& j) {
  Dataset d;
  for (const auto& ji : field(j, "instances")) d.instances.push_back(instance_from_json(ji));
  const auto& split = field(j, "split");
  if (!split.is_array() || split.size() != 2) throw std::invalid_argument("split must be [train_end, val_end]");
  d.train_end = split[0].get<std::size_t>();
  d.val_end = split[1].get<std::size_t>();
  if (d.train_end > d.val_end || d.val_end > d.instances.size())
    throw std::invalid_argument("split indices out of range");
  return d;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Json::parse(in);
}

void write_json_file(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

void save_instance(const NlpInstance& instance, const std::filesystem::path& path) {
  write_json_file(to_json(instance), path);
}

NlpInstance load_instance(const std::filesystem::path& path) {
  return instance_from_json(read_json_file(path));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_json_file(to_json(dataset), path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(read_json_file(path));
}

}  // namespace lipm

#include "avmig/nn/checkpoint.hpp"

#include <map>

#include "avmig/errors.hpp"

namespace avmig::nn {

void write_checkpoint(std::ostream& out, const std::string& kind,
                      const nlohmann::json& meta,
                      std::span<Parameter* const> params) {
  nlohmann::json doc;
  doc["format"] = "avmig-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["kind"] = kind;
  doc["meta"] = meta;
  nlohmann::json tensors = nlohmann::json::array();
  for (const Parameter* p : params) {
    nlohmann::json t;
    t["name"] = p->name;
    t["shape"] = {p->value.rows(), p->value.cols()};
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) values.push_back(p->value(i, j));
    }
    t["values"] = std::move(values);
    tensors.push_back(std::move(t));
  }
  doc["tensors"] = std::move(tensors);
  out << doc.dump() << '\n';
}

Checkpoint read_checkpoint(std::istream& in) {
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(), 0);
  }
  try {
    if (doc.at("format") != "avmig-checkpoint") throw ParseError("not an avmig checkpoint", 0);
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version", 0);
    }
    Checkpoint ckpt;
    ckpt.kind = doc.at("kind").get<std::string>();
    if (doc.contains("meta")) ckpt.meta = doc.at("meta");
    for (const auto& t : doc.at("tensors")) {
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      const auto& values = t.at("values");
      if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(values.size()) != rows * cols) {
        throw ParseError("tensor " + t.at("name").get<std::string>() +
                             ": value count does not match shape", 0);
      }
      Matrix m(rows, cols);
      std::size_t k = 0;
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = values[k++].get<double>();
      }
      ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
}

void restore(const Checkpoint& ckpt, std::span<Parameter* const> params) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : ckpt.tensors) by_name[name] = &m;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw ValidationError("checkpoint lacks tensor " + p->name);
    const Matrix& m = *it->second;
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw ValidationError("checkpoint tensor " + p->name + " has the wrong shape");
    }
    p->value = m;
    p->zero_grad();
  }
}

}  // namespace avmig::nn

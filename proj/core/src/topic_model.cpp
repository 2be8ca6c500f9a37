#include "aggtopics/topic_model.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <sstream>

#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"

namespace aggtopics {

using nlohmann::json;

std::string_view to_string(ModelFamily family) {
  return family == ModelFamily::gibbs_lda ? "gibbs_lda" : "cluster";
}

ModelFamily parse_model_family(std::string_view name) {
  if (name == "gibbs_lda" || name == "lda") return ModelFamily::gibbs_lda;
  if (name == "cluster") return ModelFamily::cluster;
  throw InvalidConfig("unknown model family '" + std::string(name) + "'");
}

MatrixFormat parse_matrix_format(std::string_view name) {
  if (name == "csv") return MatrixFormat::csv;
  if (name == "binary" || name == "bin") return MatrixFormat::binary;
  throw InvalidConfig("unknown matrix format '" + std::string(name) + "'");
}

std::vector<double> mean_theta(const TopicModel& model) {
  const auto& theta = model.theta;
  std::vector<double> mean(theta.cols(), 0.0);
  if (theta.rows() == 0) return mean;
  for (std::size_t d = 0; d < theta.rows(); ++d) {
    auto row = theta.row(d);
    for (std::size_t k = 0; k < row.size(); ++k) mean[k] += row[k];
  }
  for (auto& m : mean) m /= static_cast<double>(theta.rows());
  return mean;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += io::format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t p = 0;
    while (p <= line.size()) {
      auto comma = line.find(',', p);
      if (comma == std::string_view::npos) comma = line.size();
      double value = 0.0;
      auto field = line.substr(p, comma - p);
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("bad matrix entry '" + std::string(field) + "'");
      row.push_back(value);
      p = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged matrix CSV");
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  return m;
}

std::string matrix_to_bytes(const Matrix& m) {
  std::string out(m.data().size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return out;
}

Matrix matrix_from_bytes(std::string_view bytes, std::size_t rows, std::size_t cols) {
  if (bytes.size() != rows * cols * sizeof(double)) throw ParseError("binary matrix has wrong size");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    m.data()[i] = std::bit_cast<double>(bits);
  }
  return m;
}

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

void write_model(const std::filesystem::path& dir, const TopicModel& model, MatrixFormat format) {
  std::filesystem::create_directories(dir);
  const bool csv = format == MatrixFormat::csv;
  json header = {{"format_version", 1},
                 {"family", to_string(model.family)},
                 {"K", model.num_topics},
                 {"V", model.phi.cols()},
                 {"D", model.theta.rows()},
                 {"config", model.config},
                 {"matrix_format", csv ? "csv" : "binary"}};
  io::write_json(dir / "model.json", header);
  if (csv) {
    io::write_file(dir / "phi.csv", matrix_to_csv(model.phi));
    io::write_file(dir / "theta.csv", matrix_to_csv(model.theta));
  } else {
    io::write_file(dir / "phi.bin", matrix_to_bytes(model.phi));
    io::write_file(dir / "theta.bin", matrix_to_bytes(model.theta));
  }
  io::write_file(dir / "vocabulary.txt", join_lines(model.terms));
  io::write_file(dir / "documents.txt", join_lines(model.doc_ids));
  io::write_json(dir / "timing.json", {{"fit_seconds", model.fit_seconds}});
}

TopicModel read_model(const std::filesystem::path& dir) {
  const json header = io::read_json(dir / "model.json");
  TopicModel model;
  try {
    model.family = parse_model_family(header.at("family").get<std::string>());
    model.num_topics = header.at("K").get<int>();
    model.config = header.value("config", json::object());
    const auto k = header.at("K").get<std::size_t>();
    const auto v = header.at("V").get<std::size_t>();
    const auto d = header.at("D").get<std::size_t>();
    if (header.at("matrix_format").get<std::string>() == "csv") {
      model.phi = matrix_from_csv(io::read_file(dir / "phi.csv"));
      model.theta = matrix_from_csv(io::read_file(dir / "theta.csv"));
    } else {
      model.phi = matrix_from_bytes(io::read_file(dir / "phi.bin"), k, v);
      model.theta = matrix_from_bytes(io::read_file(dir / "theta.bin"), d, k);
    }
    if (model.phi.rows() != k || model.phi.cols() != v || model.theta.rows() != d || model.theta.cols() != k)
      throw ParseError("matrix shapes disagree with model.json");
  } catch (const json::exception& e) {
    throw ParseError("model.json: " + std::string(e.what()));
  }
  model.terms = split_lines(io::read_file(dir / "vocabulary.txt"));
  model.doc_ids = split_lines(io::read_file(dir / "documents.txt"));
  if (std::filesystem::exists(dir / "timing.json")) {
    model.fit_seconds = io::read_json(dir / "timing.json").value("fit_seconds", 0.0);
  }
  return model;
}

}  // namespace aggtopics

#include "normest/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace normest {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool parse_three_reals(const std::string& line, Vec3& out) {
  std::istringstream is(line);
  double x = 0.0, y = 0.0, z = 0.0;
  if (!(is >> x >> y >> z)) return false;
  std::string trailing;
  if (is >> trailing) return false;
  out = Vec3(x, y, z);
  return true;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::vector<Vec3> load_rows(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string(what) + ": cannot open '" + path + "'");
  std::vector<Vec3> rows;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    Vec3 v;
    if (!parse_three_reals(line, v)) {
      throw DataError(std::string(what) + ": '" + path + "' line " + std::to_string(line_no) +
                      ": expected exactly 3 decimal reals");
    }
    rows.push_back(v);
  }
  if (rows.empty()) throw DataError(std::string(what) + ": '" + path + "' contains no records");
  return rows;
}

void save_rows(const std::string& path, const std::vector<Vec3>& rows, const char* what) {
  std::ofstream out(path);
  if (!out) throw DataError(std::string(what) + ": cannot write '" + path + "'");
  for (const Vec3& v : rows) {
    out << fmt17(v.x()) << ' ' << fmt17(v.y()) << ' ' << fmt17(v.z()) << '\n';
  }
  if (!out) throw DataError(std::string(what) + ": write failed for '" + path + "'");
}

}  // namespace

PointCloud load_xyz(const std::string& path) {
  PointCloud cloud;
  cloud.points = load_rows(path, "load_xyz");
  return cloud;
}

void save_xyz(const std::string& path, const PointCloud& cloud) {
  save_rows(path, cloud.points, "save_xyz");
}

void load_normals(const std::string& path, PointCloud& cloud) {
  std::vector<Vec3> rows = load_rows(path, "load_normals");
  if (rows.size() != cloud.size()) {
    throw DataError("load_normals: '" + path + "' has " + std::to_string(rows.size()) +
                    " rows but the cloud has " + std::to_string(cloud.size()) + " points");
  }
  for (size_t i = 0; i < rows.size(); ++i) {
    const double len = rows[i].norm();
    if (std::abs(len - 1.0) > 1e-3) {
      throw DataError("load_normals: '" + path + "' line " + std::to_string(i + 1) +
                      ": normal length " + std::to_string(len) + " is not within 1e-3 of unit");
    }
    rows[i] /= len;
  }
  cloud.normals = std::move(rows);
}

void save_normals(const std::string& path, const std::vector<Vec3>& normals) {
  save_rows(path, normals, "save_normals");
}

namespace {

constexpr const char* kCheckpointMagic = "normest checkpoint v1";

void write_f64(std::ostream& os, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(bits));
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (is.gcount() != 8) throw DataError("load_checkpoint: truncated payload");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v = 0.0;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<int> split_ints(const std::string& s, const char* what) {
  std::vector<int> out;
  std::istringstream is(s);
  std::string part;
  while (std::getline(is, part, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw DataError("load_checkpoint: bad integer list for " + std::string(what) + ": '" + s +
                      "'");
    }
  }
  if (out.empty()) throw DataError("load_checkpoint: empty integer list for " + std::string(what));
  return out;
}

class HeaderMap {
 public:
  void put(const std::string& key, const std::string& value) { values_[key] = value; }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw DataError("load_checkpoint: missing header key '" + key + "'");
    return it->second;
  }

  long long get_int(const std::string& key) const {
    try {
      size_t used = 0;
      const std::string& s = get(key);
      const long long v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("load_checkpoint: bad integer for header key '" + key + "'");
    }
  }

  double get_double(const std::string& key) const {
    try {
      size_t used = 0;
      const std::string& s = get(key);
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const DataError&) {
      throw;
    } catch (const std::exception&) {
      throw DataError("load_checkpoint: bad real for header key '" + key + "'");
    }
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace

void save_checkpoint(const std::string& path, Checkpoint& checkpoint) {
  checkpoint.model.validate();
  checkpoint.train.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_checkpoint: cannot write '" + path + "'");

  const ModelConfig& mc = checkpoint.model;
  const TrainConfig& tc = checkpoint.train;
  out << kCheckpointMagic << '\n';
  out << "model.patch_size " << mc.patch_size << '\n';
  out << "model.scales " << join_ints(mc.scales) << '\n';
  out << "model.encoded_points " << mc.encoded_points << '\n';
  out << "model.k_local " << mc.k_local << '\n';
  out << "model.encode_k " << mc.encode_k << '\n';
  out << "model.feature_dim " << mc.feature_dim << '\n';
  out << "model.dense_depth " << mc.dense_depth << '\n';
  out << "model.dense_growth " << mc.dense_growth << '\n';
  out << "model.residual_blocks " << mc.residual_blocks << '\n';
  out << "model.hidden " << mc.hidden << '\n';
  out << "train.alpha1 " << fmt17(tc.alpha1) << '\n';
  out << "train.alpha2 " << fmt17(tc.alpha2) << '\n';
  out << "train.lr " << fmt17(tc.lr) << '\n';
  out << "train.decay_factor " << fmt17(tc.decay_factor) << '\n';
  out << "train.decay_every " << tc.decay_every << '\n';
  out << "train.batch_size " << tc.batch_size << '\n';
  out << "train.epochs " << tc.epochs << '\n';
  out << "train.queries_per_shape " << tc.queries_per_shape << '\n';
  out << "train.seed " << tc.seed << '\n';
  out << "train.normal_loss "
      << (tc.normal_loss == TrainConfig::NormalLoss::Sin ? "sin" : "mse") << '\n';
  out << "step " << checkpoint.step << '\n';
  out << "rng_state " << checkpoint.rng_state << '\n';
  out << "opt " << (checkpoint.has_opt ? 1 : 0) << '\n';

  auto tensors = checkpoint.params.named_tensors();
  out << "tensors " << tensors.size() << '\n';
  for (auto& [name, tensor] : tensors) {
    out << "tensor " << name << ' ' << join_ints(tensor.shape()) << '\n';
  }
  out << "payload\n";

  for (auto& [name, tensor] : tensors) {
    for (double v : tensor.values()) write_f64(out, v);
  }
  if (checkpoint.has_opt) {
    std::vector<Tensor> list;
    for (auto& [name, tensor] : tensors) list.push_back(tensor);
    if (!checkpoint.opt.matches(list)) {
      throw std::invalid_argument("save_checkpoint: optimizer state does not match parameters");
    }
    for (size_t i = 0; i < tensors.size(); ++i) {
      for (double v : checkpoint.opt.m[i]) write_f64(out, v);
      for (double v : checkpoint.opt.v[i]) write_f64(out, v);
    }
  }
  if (!out) throw DataError("save_checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_checkpoint: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw DataError("load_checkpoint: '" + path + "' is not a checkpoint of a supported version");
  }

  HeaderMap header;
  std::vector<std::pair<std::string, std::vector<int>>> directory;
  long long declared_tensors = -1;
  bool saw_payload = false;
  while (std::getline(in, line)) {
    if (line == "payload") {
      saw_payload = true;
      break;
    }
    const size_t sp = line.find(' ');
    const std::string key = line.substr(0, sp == std::string::npos ? line.size() : sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "tensor") {
      const size_t sp2 = value.rfind(' ');
      if (sp2 == std::string::npos) {
        throw DataError("load_checkpoint: malformed tensor directory line '" + line + "'");
      }
      directory.emplace_back(value.substr(0, sp2),
                             split_ints(value.substr(sp2 + 1), "tensor shape"));
    } else if (key == "tensors") {
      try {
        declared_tensors = std::stoll(value);
      } catch (const std::exception&) {
        throw DataError("load_checkpoint: bad tensor count '" + value + "'");
      }
    } else {
      header.put(key, value);
    }
  }
  if (!saw_payload) throw DataError("load_checkpoint: missing payload marker");
  if (declared_tensors != static_cast<long long>(directory.size())) {
    throw DataError("load_checkpoint: tensor directory count mismatch");
  }

  Checkpoint ckpt;
  ckpt.model.patch_size = static_cast<int>(header.get_int("model.patch_size"));
  ckpt.model.scales = split_ints(header.get("model.scales"), "model.scales");
  ckpt.model.encoded_points = static_cast<int>(header.get_int("model.encoded_points"));
  ckpt.model.k_local = static_cast<int>(header.get_int("model.k_local"));
  ckpt.model.encode_k = static_cast<int>(header.get_int("model.encode_k"));
  ckpt.model.feature_dim = static_cast<int>(header.get_int("model.feature_dim"));
  ckpt.model.dense_depth = static_cast<int>(header.get_int("model.dense_depth"));
  ckpt.model.dense_growth = static_cast<int>(header.get_int("model.dense_growth"));
  ckpt.model.residual_blocks = static_cast<int>(header.get_int("model.residual_blocks"));
  ckpt.model.hidden = static_cast<int>(header.get_int("model.hidden"));
  try {
    ckpt.model.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("load_checkpoint: invalid model config: ") + e.what());
  }

  ckpt.train.alpha1 = header.get_double("train.alpha1");
  ckpt.train.alpha2 = header.get_double("train.alpha2");
  ckpt.train.lr = header.get_double("train.lr");
  ckpt.train.decay_factor = header.get_double("train.decay_factor");
  ckpt.train.decay_every = static_cast<int>(header.get_int("train.decay_every"));
  ckpt.train.batch_size = static_cast<int>(header.get_int("train.batch_size"));
  ckpt.train.epochs = static_cast<int>(header.get_int("train.epochs"));
  ckpt.train.queries_per_shape = static_cast<int>(header.get_int("train.queries_per_shape"));
  ckpt.train.seed = static_cast<std::uint64_t>(header.get_int("train.seed"));
  const std::string loss_name = header.get("train.normal_loss");
  if (loss_name == "sin") {
    ckpt.train.normal_loss = TrainConfig::NormalLoss::Sin;
  } else if (loss_name == "mse") {
    ckpt.train.normal_loss = TrainConfig::NormalLoss::Mse;
  } else {
    throw DataError("load_checkpoint: unknown loss kind '" + loss_name + "'");
  }
  try {
    ckpt.train.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("load_checkpoint: invalid train config: ") + e.what());
  }

  ckpt.step = header.get_int("step");
  ckpt.rng_state = header.get("rng_state");
  ckpt.has_opt = header.get_int("opt") != 0;

  // The directory must agree with the parameter layout the config implies.
  ckpt.params = init_params(ckpt.model, 0);
  auto tensors = ckpt.params.named_tensors();
  if (tensors.size() != directory.size()) {
    throw DataError("load_checkpoint: tensor directory does not match the model config (" +
                    std::to_string(directory.size()) + " entries, expected " +
                    std::to_string(tensors.size()) + ")");
  }
  for (size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].first != directory[i].first || tensors[i].second.shape() != directory[i].second) {
      throw DataError("load_checkpoint: tensor '" + directory[i].first + "' (" +
                      shape_str(directory[i].second) + ") does not match the model config entry '" +
                      tensors[i].first + "' (" + shape_str(tensors[i].second.shape()) + ")");
    }
  }

  for (auto& [name, tensor] : tensors) {
    for (double& v : tensor.values()) v = read_f64(in);
  }
  if (ckpt.has_opt) {
    std::vector<Tensor> list;
    for (auto& [name, tensor] : tensors) list.push_back(tensor);
    ckpt.opt = AdamState::init(list);
    ckpt.opt.step = ckpt.step;
    for (size_t i = 0; i < tensors.size(); ++i) {
      for (double& v : ckpt.opt.m[i]) v = read_f64(in);
      for (double& v : ckpt.opt.v[i]) v = read_f64(in);
    }
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw DataError("load_checkpoint: trailing bytes after payload");
  }
  return ckpt;
}

}  // namespace normest

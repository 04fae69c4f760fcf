#include "diip/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "diip/image_io.hpp"

namespace diip {

double normalized_slope(double e_prev, double e_curr) {
  if (e_prev == 0.0) return 0.0;
  return (e_curr - e_prev) / e_prev;
}

Trajectory::Trajectory(int window) : window_(window) {
  if (window < 1) throw Error("trajectory: window must be >= 1");
}

void Trajectory::append_record(const TrajectoryRecord& rec) {
  if (rec.k != size()) throw Error("trajectory: records must be appended in order without gaps");
  records_.push_back(rec);
  track_sharpness(rec.k);
}

void Trajectory::append(const TrajectoryRecord& rec, const Image& x_hat) {
  if (rec.k != size()) throw Error("trajectory: records must be appended in order without gaps");
  ring_.emplace_back(rec.k, x_hat);
  records_.push_back(rec);
  track_sharpness(rec.k);
  while (static_cast<int>(ring_.size()) > window_) ring_.pop_front();
}

void Trajectory::track_sharpness(long k) {
  const double v = records_[static_cast<std::size_t>(k)].lap_var;
  const long old_argmax = argmax_;
  if (argmax_ < 0 || v > records_[static_cast<std::size_t>(argmax_)].lap_var) argmax_ = k;
  if (argmax_ != old_argmax) {
    store(argmax_);
    // the previous running argmax stays only if it is also an interior peak
    if (old_argmax >= 0 && !std::binary_search(peaks_.begin(), peaks_.end(), old_argmax) &&
        !requested_.count(old_argmax)) {
      pinned_.erase(old_argmax);
    }
  }
  if (k >= 2) {
    const double a = records_[static_cast<std::size_t>(k - 2)].lap_var;
    const double b = records_[static_cast<std::size_t>(k - 1)].lap_var;
    if (a < b && v < b) {
      peaks_.push_back(k - 1);
      store(k - 1);
    }
  }
}

bool Trajectory::pin(long k) {
  if (!store(k)) return false;
  requested_.insert(k);
  return true;
}

bool Trajectory::store(long k) {
  if (pinned_.count(k)) return true;
  for (const auto& [rk, img] : ring_) {
    if (rk == k) {
      pinned_.emplace(k, img);
      return true;
    }
  }
  return false;
}

const Image* Trajectory::snapshot(long k) const {
  if (auto it = pinned_.find(k); it != pinned_.end()) return &it->second;
  for (const auto& [rk, img] : ring_)
    if (rk == k) return &img;
  return nullptr;
}

std::vector<long> Trajectory::pinned_iters() const {
  std::vector<long> out;
  for (const auto& [k, img] : pinned_) out.push_back(k);
  return out;
}

std::size_t Trajectory::stored_snapshots() const {
  std::size_t n = pinned_.size();
  for (const auto& [k, img] : ring_) n += pinned_.count(k) ? 0 : 1;
  return n;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_field(const std::string& s, long line) {
  if (s == "nan") return kUndefinedSlope;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error("trajectory csv line " + std::to_string(line) + ": bad number '" + s + "'");
}

}  // namespace

void Trajectory::write_csv(std::ostream& os) const {
  os << "k,loss,delta_k,lap_var,psnr_ref\n";
  for (const auto& r : records_) {
    os << r.k << ',' << num(r.loss) << ',' << num(r.delta_k) << ',' << num(r.lap_var) << ','
       << (r.psnr_ref ? num(*r.psnr_ref) : "") << '\n';
  }
}

void Trajectory::save_csv(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  write_csv(os);
}

Trajectory Trajectory::read_csv(std::istream& is, int window) {
  Trajectory tr(window);
  std::string line;
  if (!std::getline(is, line) || line.rfind("k,loss,delta_k,lap_var,psnr_ref", 0) != 0) {
    throw Error("trajectory csv: missing header");
  }
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw Error("trajectory csv line " + std::to_string(lineno) + ": expected 5 fields");
    TrajectoryRecord r;
    r.k = static_cast<long>(parse_field(f[0], lineno));
    r.loss = parse_field(f[1], lineno);
    r.delta_k = parse_field(f[2], lineno);
    r.lap_var = parse_field(f[3], lineno);
    if (!f[4].empty()) r.psnr_ref = parse_field(f[4], lineno);
    tr.append_record(r);
  }
  return tr;
}

Trajectory Trajectory::load_csv(const std::filesystem::path& path, int window) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open trajectory '" + path.string() + "'");
  return read_csv(is, window);
}

void Trajectory::save_snapshots(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto write = [&](long k, const Image& img) {
    save_dimg(dir / ("snap_" + std::to_string(k) + ".dimg"), img);
  };
  for (const auto& [k, img] : pinned_) write(k, img);
  for (const auto& [k, img] : ring_)
    if (!pinned_.count(k)) write(k, img);
}

}  // namespace diip

#include <algorithm>
#include <limits>
#include <vector>

#include "rppg/superpixel.hpp"

namespace rppg {
namespace {

struct Components {
  std::vector<int> of_pixel;
  std::vector<std::int32_t> label;
  std::vector<std::vector<std::size_t>> pixels;
};

Components find_components(const LabelMap& labels) {
  const int w = labels.width;
  const int h = labels.height;
  Components c;
  c.of_pixel.assign(labels.pixel_count(), -1);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < labels.pixel_count(); ++start) {
    if (c.of_pixel[start] >= 0) continue;
    const int id = static_cast<int>(c.label.size());
    const std::int32_t lab = labels.labels[start];
    c.label.push_back(lab);
    c.pixels.emplace_back();
    auto& members = c.pixels.back();
    c.of_pixel[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      members.push_back(p);
      const int x = static_cast<int>(p % w);
      const int y = static_cast<int>(p / w);
      const auto visit = [&](int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
        const std::size_t q = std::size_t(ny) * w + nx;
        if (c.of_pixel[q] < 0 && labels.labels[q] == lab) {
          c.of_pixel[q] = id;
          stack.push_back(q);
        }
      };
      visit(x - 1, y);
      visit(x + 1, y);
      visit(x, y - 1);
      visit(x, y + 1);
    }
  }
  return c;
}

}  // namespace

void enforce_connectivity(const LabImage& frame, LabelMap& labels, std::span<const Seed> seeds) {
  const int w = labels.width;
  const int h = labels.height;
  Components comps = find_components(labels);
  const int n_comps = static_cast<int>(comps.label.size());

  // Largest component per label is kept; ties go to the one found first.
  std::vector<int> main_of_label(seeds.size(), -1);
  for (int c = 0; c < n_comps; ++c) {
    const std::int32_t lab = comps.label[c];
    if (lab < 0 || static_cast<std::size_t>(lab) >= seeds.size()) continue;
    int& m = main_of_label[lab];
    if (m < 0 || comps.pixels[c].size() > comps.pixels[m].size()) m = c;
  }
  std::vector<bool> is_main(n_comps, false);
  std::vector<int> orphans;
  for (int c = 0; c < n_comps; ++c) {
    const std::int32_t lab = comps.label[c];
    if (lab >= 0 && static_cast<std::size_t>(lab) < seeds.size() && main_of_label[lab] == c) {
      is_main[c] = true;
    } else {
      orphans.push_back(c);
    }
  }

  while (!orphans.empty()) {
    std::vector<int> pending;
    for (const int c : orphans) {
      const auto& members = comps.pixels[c];
      Lab mean;
      for (const std::size_t p : members) {
        mean.l += frame.l[p];
        mean.a += frame.a[p];
        mean.b += frame.b[p];
      }
      const double inv = 1.0 / double(members.size());
      mean = {mean.l * inv, mean.a * inv, mean.b * inv};

      std::int32_t target = LabelMap::kUnassigned;
      double target_d = std::numeric_limits<double>::infinity();
      const auto consider = [&](std::size_t q) {
        const int qc = comps.of_pixel[q];
        if (qc == c || !is_main[qc]) return;
        const std::int32_t lab = comps.label[qc];
        const double d = lab_distance(mean, seeds[lab].lab);
        if (d < target_d || (d == target_d && lab < target)) {
          target_d = d;
          target = lab;
        }
      };
      for (const std::size_t p : members) {
        const int x = static_cast<int>(p % w);
        const int y = static_cast<int>(p / w);
        if (x > 0) consider(p - 1);
        if (x + 1 < w) consider(p + 1);
        if (y > 0) consider(p - w);
        if (y + 1 < h) consider(p + w);
      }
      if (target == LabelMap::kUnassigned) {
        pending.push_back(c);
        continue;
      }
      const int into = main_of_label[target];
      for (const std::size_t p : members) {
        labels.labels[p] = target;
        comps.of_pixel[p] = into;
      }
    }
    if (pending.size() == orphans.size()) break;  // unreachable for a connected raster
    orphans.swap(pending);
  }
}

bool is_four_connected(const LabelMap& labels) {
  const Components comps = find_components(labels);
  std::vector<int> count;
  for (const std::int32_t lab : comps.label) {
    if (lab < 0) return false;
    if (static_cast<std::size_t>(lab) >= count.size()) count.resize(lab + 1, 0);
    if (++count[lab] > 1) return false;
  }
  return true;
}

}  // namespace rppg

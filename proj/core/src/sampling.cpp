#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "topology_impl.hpp"

namespace toporel {

namespace {

// Uniform grid over entity envelopes; queries return ascending indices.
class EnvelopeIndex {
 public:
  explicit EnvelopeIndex(const std::vector<Envelope>& envs) : envs_(envs) {
    std::vector<double> extents;
    for (const auto& e : envs) extents.push_back(std::max(e.max_x - e.min_x, e.max_y - e.min_y));
    double cell = 1e-3;
    if (!extents.empty()) {
      std::nth_element(extents.begin(), extents.begin() + static_cast<std::ptrdiff_t>(extents.size() / 2), extents.end());
      cell = std::max(extents[extents.size() / 2] * 4.0, 1e-9);
    }
    cell_ = cell;
    for (std::size_t i = 0; i < envs.size(); ++i) {
      for_cells(envs[i], [&](std::int64_t cx, std::int64_t cy) { cells_[{cx, cy}].push_back(i); });
    }
  }

  std::vector<std::size_t> query(const Envelope& env) const {
    std::vector<std::size_t> out;
    for_cells(env, [&](std::int64_t cx, std::int64_t cy) {
      auto it = cells_.find({cx, cy});
      if (it == cells_.end()) return;
      for (std::size_t i : it->second) {
        if (envs_[i].intersects(env)) out.push_back(i);
      }
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  template <typename F>
  void for_cells(const Envelope& e, F&& f) const {
    const auto x0 = static_cast<std::int64_t>(std::floor(e.min_x / cell_));
    const auto x1 = static_cast<std::int64_t>(std::floor(e.max_x / cell_));
    const auto y0 = static_cast<std::int64_t>(std::floor(e.min_y / cell_));
    const auto y1 = static_cast<std::int64_t>(std::floor(e.max_y / cell_));
    for (auto x = x0; x <= x1; ++x) {
      for (auto y = y0; y <= y1; ++y) f(x, y);
    }
  }

  const std::vector<Envelope>& envs_;
  double cell_ = 1.0;
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> cells_;
};

bool is_simple_type(GeometryType t) {
  return t == GeometryType::Point || t == GeometryType::LineString || t == GeometryType::Polygon;
}

bool join_predicate(Predicate p) { return p != Predicate::Equals && p != Predicate::Disjoint; }

}  // namespace

const SpatialEntity& sample_disjoint(const std::vector<const SpatialEntity*>& pool, const SpatialEntity& object,
                                     double buffer_d, Rng& rng) {
  if (!(buffer_d > 0)) throw DataError("disjoint buffer must be positive");
  const Envelope reach = object.geometry.envelope().expanded(buffer_d);
  const PreparedGeometry prepared(object.geometry);
  std::vector<const SpatialEntity*> candidates;
  for (const SpatialEntity* e : pool) {
    if (e->id == object.id || !e->geometry.envelope().intersects(reach)) continue;
    if (classify(PreparedGeometry(e->geometry), prepared).predicate != Predicate::Disjoint) continue;
    if (distance(e->geometry, object.geometry) <= buffer_d) candidates.push_back(e);
  }
  if (candidates.empty()) throw NoCandidate("no disjoint entity within " + std::to_string(buffer_d) + " of " + object.id);
  return *candidates[rng.uniform_int(candidates.size())];
}

TripletSet sample_triplets(const Corpus& corpus, const SampleOptions& options) {
  const auto& entities = corpus.entities();
  std::vector<std::size_t> simple;
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (is_simple_type(entities[i].geometry.type())) simple.push_back(i);
  }
  std::vector<Envelope> envs;
  std::vector<PreparedGeometry> prepared;
  for (std::size_t i : simple) {
    envs.push_back(entities[i].geometry.envelope());
    prepared.emplace_back(entities[i].geometry);
  }
  const EnvelopeIndex index(envs);

  // Spatial join: each intersecting pair is related once; the mirror
  // orientation reuses the transposed matrix.
  std::map<RelationTuple, std::vector<std::pair<std::size_t, std::size_t>>> buckets;
  for (std::size_t i = 0; i < simple.size(); ++i) {
    for (std::size_t j : index.query(envs[i])) {
      if (j <= i) continue;
      const IntersectionMatrix m = relate(prepared[i], prepared[j]);
      const int di = prepared[i].impl().dim, dj = prepared[j].impl().dim;
      const GeometryType ti = entities[simple[i]].geometry.type(), tj = entities[simple[j]].geometry.type();
      if (auto p = classify_matrix(m, di, dj).predicate; p && join_predicate(*p)) buckets[{ti, *p, tj}].emplace_back(i, j);
      if (auto p = classify_matrix(m.transposed(), dj, di).predicate; p && join_predicate(*p)) {
        buckets[{tj, *p, ti}].emplace_back(j, i);
      }
    }
  }
  for (auto& [tuple, pairs] : buckets) std::sort(pairs.begin(), pairs.end());

  std::map<GeometryType, std::vector<std::size_t>> by_type;
  for (std::size_t i = 0; i < simple.size(); ++i) by_type[entities[simple[i]].geometry.type()].push_back(i);

  TripletSet out;
  std::vector<std::string> shortfall;
  std::set<std::string> used_ids;
  for (const auto& e : entities) used_ids.insert(e.id);

  for (const RelationTuple& tuple : all_relation_tuples()) {
    Rng rng(derive_seed(options.seed, tuple.key()));
    std::vector<RelationTriplet> picked;
    auto emit = [&](const std::string& s, const std::string& o) {
      picked.push_back({s, tuple.predicate, o, tuple.type_a, tuple.type_b, std::nullopt});
    };

    if (join_predicate(tuple.predicate)) {
      const auto& pairs = buckets[tuple];
      if (pairs.size() >= options.per_combo) {
        for (std::size_t k : rng.sample_indices(pairs.size(), options.per_combo)) {
          emit(entities[simple[pairs[k].first]].id, entities[simple[pairs[k].second]].id);
        }
      }
    } else if (tuple.predicate == Predicate::Equals) {
      std::vector<std::size_t> order = by_type[tuple.type_b];
      rng.shuffle(order);
      for (std::size_t i : order) {
        if (picked.size() == options.per_combo) break;
        const SpatialEntity& object = entities[simple[i]];
        Geometry g;
        try {
          g = synthesize_equal(object.geometry, derive_seed(options.seed, "equals:" + object.id), options.precision);
        } catch (const SynthesisError&) {
          continue;
        }
        std::string id = object.id + "~eq";
        for (int n = 2; used_ids.count(id); ++n) id = object.id + "~eq" + std::to_string(n);
        used_ids.insert(id);
        out.synthesized.push_back({id, std::move(g), object.name, object.place_type, "equals-synthesis"});
        emit(id, object.id);
      }
    } else {
      std::vector<std::size_t> order = by_type[tuple.type_b];
      rng.shuffle(order);
      for (std::size_t i : order) {
        if (picked.size() == options.per_combo) break;
        const SpatialEntity& object = entities[simple[i]];
        std::vector<const SpatialEntity*> pool;
        for (std::size_t j : index.query(envs[i].expanded(options.disjoint_buffer))) {
          if (entities[simple[j]].geometry.type() == tuple.type_a) pool.push_back(&entities[simple[j]]);
        }
        try {
          emit(sample_disjoint(pool, object, options.disjoint_buffer, rng).id, object.id);
        } catch (const NoCandidate&) {
        }
      }
    }

    if (picked.size() < options.per_combo) {
      shortfall.push_back(tuple.to_string() + ": " + std::to_string(picked.size()) + "/" +
                          std::to_string(options.per_combo));
    }
    out.triplets.insert(out.triplets.end(), picked.begin(), picked.end());
  }
  if (!shortfall.empty()) {
    std::string msg = "corpus too small for " + std::to_string(shortfall.size()) + " relation tuple(s):";
    for (const auto& s : shortfall) msg += " " + s + ";";
    throw ShortfallError(msg, shortfall);
  }
  return out;
}

std::vector<RelationTriplet> split(std::vector<RelationTriplet> triplets, std::uint64_t seed, const SplitCounts& counts) {
  std::map<RelationTuple, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < triplets.size(); ++i) groups[triplets[i].tuple()].push_back(i);
  std::string bad;
  for (const auto& [tuple, members] : groups) {
    if (members.size() != counts.total()) {
      bad += " " + tuple.to_string() + "=" + std::to_string(members.size());
    }
  }
  if (!bad.empty()) {
    throw CountError("every relation tuple needs exactly " + std::to_string(counts.total()) + " triplets;" + bad);
  }
  for (auto& [tuple, members] : groups) {
    Rng rng(derive_seed(seed, "split:" + tuple.key()));
    rng.shuffle(members);
    for (std::size_t k = 0; k < members.size(); ++k) {
      Split s = k < counts.train ? Split::Train : (k < counts.train + counts.eval ? Split::Eval : Split::Fewshot);
      triplets[members[k]].split = s;
    }
  }
  return triplets;
}

std::vector<RelationTriplet> retrieval_corpus(const std::vector<RelationTriplet>& triplets) {
  std::vector<RelationTriplet> out;
  for (const auto& t : triplets) {
    if (t.split == Split::Eval && t.predicate != Predicate::Disjoint) out.push_back(t);
  }
  return out;
}

std::vector<TripletViolation> verify_triplets(const Corpus& corpus, const std::vector<RelationTriplet>& triplets) {
  std::vector<TripletViolation> out;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    auto fail = [&](const std::string& msg) { out.push_back({i, t.subject_id + " " + std::string(predicate_name(t.predicate)) + " " + t.object_id + ": " + msg}); };
    const SpatialEntity* s = corpus.find(t.subject_id);
    const SpatialEntity* o = corpus.find(t.object_id);
    if (!s || !o) {
      fail("unknown entity id");
      continue;
    }
    if (s->geometry.type() != t.type_a || o->geometry.type() != t.type_b) {
      fail("geometry types do not match type_a/type_b");
      continue;
    }
    if (!is_valid_combination(t.tuple())) {
      fail("not a valid type combination for the predicate");
      continue;
    }
    try {
      const auto c = classify(s->geometry, o->geometry);
      if (c.predicate != t.predicate) {
        fail("classify gives " + std::string(c.predicate ? predicate_name(*c.predicate) : "undetermined") + " (" +
             c.matrix.to_string() + ")");
      }
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  return out;
}

}  // namespace toporel

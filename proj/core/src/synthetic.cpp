#include "cofiner/synthetic.hpp"

#include <random>

#include "cofiner/error.hpp"
#include "cofiner/rng.hpp"

namespace cofiner {

SyntheticSpec SyntheticSpec::standard() {
  SyntheticSpec spec;
  spec.groups = {
      {"LOC", {"loc_city", "loc_country", "loc_river"}},
      {"MISC", {"misc_award", "misc_event", "misc_product"}},
      {"ORG", {"org_company", "org_government", "org_sports"}},
      {"PER", {"per_actor", "per_athlete", "per_politician"}},
  };
  return spec;
}

namespace {

void check_spec(const SyntheticSpec& spec) {
  if (spec.groups.empty()) throw ArgumentError("synthetic spec has no coarse types");
  for (const auto& g : spec.groups)
    if (g.fine.size() < 2)
      throw ArgumentError("coarse type '" + g.coarse + "' needs at least two fine subtypes");
  if (!(spec.corruption_rate >= 0.0 && spec.corruption_rate < 1.0))
    throw ArgumentError("corruption rate must lie in [0, 1)");
  if (spec.markers_per_fine == 0 || spec.filler_vocab == 0)
    throw ArgumentError("vocabulary sizes must be positive");
  if (spec.min_length == 0 || spec.min_length > spec.max_length)
    throw ArgumentError("invalid sentence length range");
  if (spec.max_entity_len == 0) throw ArgumentError("max_entity_len must be positive");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(spec.fine_cue_prob) || !prob(spec.coarse_cue_prob) || !prob(spec.entity_rate))
    throw ArgumentError("probabilities must lie in [0, 1]");
  if ((spec.fine_cue_prob > 0 && spec.fine_cues_per_type == 0) ||
      (spec.coarse_cue_prob > 0 && spec.coarse_cues_per_type == 0))
    throw ArgumentError("cue probability set but no cue words");
}

struct Entity {
  std::size_t start;
  std::size_t end;
  TypeId fine;
};

struct Generator {
  const SyntheticSpec& spec;
  const std::vector<std::string>& fine_names;
  const std::vector<std::string>& coarse_names;
  const std::vector<TypeId>& parent;
  Rng& rng;

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

  std::string filler() { return "w" + std::to_string(below(spec.filler_vocab)); }

  // Tokens plus fine-level gold tags.
  TaggedSentence sentence(std::vector<Entity>& entities) {
    const std::size_t length = spec.min_length + below(spec.max_length - spec.min_length + 1);
    TaggedSentence s;
    entities.clear();
    while (s.tokens.size() < length) {
      if (uniform() < spec.entity_rate) {
        const auto type = static_cast<TypeId>(below(fine_names.size()));
        const double r = uniform();
        if (r < spec.fine_cue_prob) {
          s.tokens.push_back(fine_names[static_cast<std::size_t>(type)] + "_cue" + std::to_string(below(spec.fine_cues_per_type)));
          s.tags.push_back(kOutsideTag);
        } else if (uniform() < spec.coarse_cue_prob) {
          s.tokens.push_back(coarse_names[static_cast<std::size_t>(parent[type])] + "_cue" +
                             std::to_string(below(spec.coarse_cues_per_type)));
          s.tags.push_back(kOutsideTag);
        }
        const std::size_t len = 1 + below(spec.max_entity_len);
        Entity e{s.tokens.size(), s.tokens.size() + len, type};
        for (std::size_t i = 0; i < len; ++i) {
          s.tokens.push_back(fine_names[static_cast<std::size_t>(type)] + "_w" + std::to_string(below(spec.markers_per_fine)));
          s.tags.push_back(i == 0 ? TagSchema::begin_tag(type) : TagSchema::inside_tag(type));
        }
        entities.push_back(e);
        // Separator so that consecutive entities never touch.
        s.tokens.push_back(filler());
        s.tags.push_back(kOutsideTag);
      } else {
        s.tokens.push_back(filler());
        s.tags.push_back(kOutsideTag);
      }
    }
    return s;
  }
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  std::vector<std::string> fine_names;
  std::vector<std::string> coarse_names;
  SyntheticData out;
  for (std::size_t c = 0; c < spec.groups.size(); ++c) {
    coarse_names.push_back(spec.groups[c].coarse);
    for (const auto& f : spec.groups[c].fine) {
      fine_names.push_back(f);
      out.hierarchy.push_back(static_cast<TypeId>(c));
    }
  }
  out.fine.schema = TagSchema(fine_names);
  out.coarse.schema = TagSchema(coarse_names);
  out.fine.name = "synthetic-fine";
  out.coarse.name = "synthetic-coarse";

  Rng fine_rng = make_rng(seed, {1});
  Rng coarse_rng = make_rng(seed, {2});
  std::vector<Entity> entities;

  Generator fine_gen{spec, fine_names, coarse_names, out.hierarchy, fine_rng};
  for (std::size_t i = 0; i < spec.fine_sentences; ++i)
    out.fine.sentences.push_back(fine_gen.sentence(entities));

  Generator coarse_gen{spec, fine_names, coarse_names, out.hierarchy, coarse_rng};
  const std::size_t num_coarse = coarse_names.size();
  for (std::size_t i = 0; i < spec.coarse_sentences; ++i) {
    TaggedSentence s = coarse_gen.sentence(entities);
    out.coarse_latent_fine.push_back(s.tags);
    std::vector<TagId> tags(s.size(), kOutsideTag);
    for (const auto& e : entities) {
      TypeId label = out.hierarchy[static_cast<std::size_t>(e.fine)];
      const std::size_t len = e.end - e.start;
      out.coarse_entity_tokens += len;
      if (spec.corruption_rate > 0.0 && coarse_gen.uniform() < spec.corruption_rate) {
        // Uniform over the other coarse types plus O (encoded as num_coarse - 1).
        auto pick = static_cast<TypeId>(coarse_gen.below(num_coarse));
        if (pick >= label) ++pick;
        label = pick == static_cast<TypeId>(num_coarse) ? -1 : pick;
        out.corrupted_tokens += len;
      }
      if (label < 0) continue;
      tags[e.start] = TagSchema::begin_tag(label);
      for (std::size_t j = e.start + 1; j < e.end; ++j) tags[j] = TagSchema::inside_tag(label);
    }
    s.tags = std::move(tags);
    out.coarse.sentences.push_back(std::move(s));
  }
  return out;
}

}  // namespace cofiner

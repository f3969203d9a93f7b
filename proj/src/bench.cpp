#include "bench.hpp"

#include <array>
#include <filesystem>
#include <vector>

#include "io_util.hpp"
#include "rng.hpp"

namespace nstr {

namespace {

const std::array<const char*, 32> kAdjectives = {
    "amber",  "ashen", "bold",  "brisk",  "cedar", "civic",  "coral", "crisp",
    "dusky",  "eager", "ebony", "fabled", "feral", "gilded", "hazel", "iron",
    "jade",   "keen",  "lunar", "mellow", "noble", "ochre",  "pale",  "quiet",
    "rustic", "sable", "tidal", "umber",  "vivid", "wry",    "zesty", "misty",
};

const std::array<const char*, 40> kNouns = {
    "falcon", "heron",   "otter",  "lynx",   "badger", "crane",  "viper",  "stork",
    "marten", "osprey",  "plover", "raven",  "shrike", "stoat",  "swift",  "tern",
    "vole",   "wren",    "ibis",   "jackal", "kestrel", "lark",  "magpie", "newt",
    "oriole", "pike",    "quail",  "robin",  "serval", "tapir",  "urchin", "weasel",
    "yak",    "zebu",    "gannet", "hare",   "eland",  "fox",    "dingo",  "bison",
};

const std::array<const char*, 8> kAttributes = {
    "color", "habitat", "diet", "lifespan", "height", "weight", "region", "call",
};

const std::array<std::array<const char*, 8>, 8> kValues = {{
    {"crimson", "indigo", "viridian", "saffron", "cobalt", "russet", "magenta", "charcoal"},
    {"tundra", "marshland", "savanna", "foothills", "mangrove", "prairie", "taiga", "heathland"},
    {"beetles", "minnows", "acorns", "berries", "grubs", "clover", "roots", "carrion"},
    {"twenty", "thirty", "forty", "fifteen", "sixty", "twelve", "eighty", "eleven"},
    {"towering", "stubby", "middling", "lofty", "squat", "lanky", "petite", "hulking"},
    {"featherlight", "hefty", "burly", "slender", "portly", "wiry", "stocky", "gaunt"},
    {"northward", "southward", "eastward", "westward", "inland", "coastal", "upland", "lowland"},
    {"trilling", "hooting", "rasping", "whistling", "chirring", "drumming", "keening",
     "warbling"},
}};

const std::array<const char*, 12> kFiller = {
    "observers", "logged",     "sightings", "during",  "annual",  "expedition",
    "fieldwork", "summaries",  "volunteers", "noted",  "detailed", "entries",
};

std::string entity_name(std::int64_t e) {
  std::string name = kAdjectives[static_cast<std::size_t>(e % 32)];
  name += ' ';
  name += kNouns[static_cast<std::size_t>((e / 32) % 40)];
  if (e >= 32 * 40) {
    name += " x" + std::to_string(e / (32 * 40));
  }
  return name;
}

}  // namespace

BenchPaths generate_benchmark(std::uint64_t seed, std::int64_t n_passages, std::int64_t n_train,
                              std::int64_t n_eval, const std::string& out_dir) {
  check(n_passages >= 1 && n_train >= 1 && n_eval >= 1, Errc::invalid,
        "generate_benchmark: counts must be >= 1");
  check(n_passages >= n_train + n_eval, Errc::invalid,
        "generate_benchmark: need n_passages >= n_train + n_eval");
  std::filesystem::create_directories(out_dir);

  struct Fact {
    std::string entity;
    std::string attribute;
    std::string value;
  };
  std::vector<Fact> facts(static_cast<std::size_t>(n_passages));

  Rng values_rng(seed, "bench-values");
  BenchPaths paths;
  paths.passages = out_dir + "/passages.tsv";
  {
    auto out = open_out(paths.passages);
    for (std::int64_t i = 0; i < n_passages; ++i) {
      Fact& fact = facts[static_cast<std::size_t>(i)];
      const auto attr = static_cast<std::size_t>(i % 8);
      fact.entity = entity_name(i / 8);
      fact.attribute = kAttributes[attr];
      fact.value = kValues[attr][values_rng.below(kValues[attr].size())];
      // Entity tokens lead, the attribute fact trails, and a generic middle
      // separates them. Spans drawn from the head or middle match several
      // passages equally well, which is the noisy-query regime the
      // soft-label machinery exists for.
      std::string text = "the " + fact.entity + " file .";
      const auto n_filler = 2 + values_rng.below(27);
      for (std::uint64_t j = 0; j < n_filler; ++j) {
        text += ' ';
        text += kFiller[values_rng.below(kFiller.size())];
      }
      text += " . its " + fact.attribute + " is " + fact.value;
      out << i << '\t' << text << '\n';
    }
    check(out.good(), Errc::io, "write failed: " + paths.passages);
  }

  Rng split_rng(seed, "bench-split");
  auto chosen = split_rng.sample_indices(static_cast<std::size_t>(n_passages),
                                         static_cast<std::size_t>(n_train + n_eval));

  auto write_queries = [&](const std::string& q_path, const std::string& r_path,
                           std::int64_t first_qid, std::size_t begin, std::size_t count) {
    auto q_out = open_out(q_path);
    auto r_out = open_out(r_path);
    for (std::size_t j = 0; j < count; ++j) {
      const auto pid = static_cast<std::int64_t>(chosen[begin + j]);
      const Fact& fact = facts[static_cast<std::size_t>(pid)];
      const std::int64_t qid = first_qid + static_cast<std::int64_t>(j);
      q_out << qid << '\t' << "what is the " << fact.attribute << " of " << fact.entity << '\t'
            << fact.value << '\n';
      r_out << qid << "\t0\t" << pid << "\t1\n";
    }
    check(q_out.good() && r_out.good(), Errc::io, "write failed: " + q_path);
  };

  paths.train_queries = out_dir + "/train_queries.tsv";
  paths.train_qrels = out_dir + "/train_qrels.tsv";
  paths.eval_queries = out_dir + "/eval_queries.tsv";
  paths.eval_qrels = out_dir + "/eval_qrels.tsv";
  write_queries(paths.train_queries, paths.train_qrels, 0, 0,
                static_cast<std::size_t>(n_train));
  write_queries(paths.eval_queries, paths.eval_qrels, n_train, static_cast<std::size_t>(n_train),
                static_cast<std::size_t>(n_eval));
  return paths;
}

}  // namespace nstr

#pragma once

#include <string>

#include "nlisa/nlisa.hpp"

namespace fixtures {

// a -r-> b, a -r-> c, b -s-> d, c -s-> d, c -s-> e
inline nlisa::KnowledgeGraph f1() {
  return nlisa::load_triples(std::string_view("a\tr\tb\na\tr\tc\nb\ts\td\nc\ts\td\nc\ts\te\n"));
}

inline nlisa::EntityId id(const nlisa::KnowledgeGraph& g, const std::string& name) {
  return *g.symbols().find_entity(name);
}

inline std::string data(const std::string& file) { return std::string(NLISA_DATA_DIR) + "/" + file; }

}  // namespace fixtures

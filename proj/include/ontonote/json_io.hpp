#pragma once

#include <string>

#include <json.hpp>

#include "ontonote/annotation.hpp"
#include "ontonote/error.hpp"
#include "ontonote/ontology.hpp"
#include "ontonote/query.hpp"

namespace ontonote {

using Json = nlohmann::json;

void to_json(Json& j, const ConceptId& id);
void from_json(const Json& j, ConceptId& id);
void to_json(Json& j, const Concept& c);
void from_json(const Json& j, Concept& c);
void to_json(Json& j, const Ontology& o);
void from_json(const Json& j, Ontology& o);

namespace edit {
// EditOp's alternatives live here, so ADL looks in this namespace.
void to_json(Json& j, const EditOp& op);
void from_json(const Json& j, EditOp& op);
}  // namespace edit

void to_json(Json& j, const User& u);
void from_json(const Json& j, User& u);
void to_json(Json& j, const Group& g);
void from_json(const Json& j, Group& g);
void to_json(Json& j, const Document& d);
void from_json(const Json& j, Document& d);
void to_json(Json& j, const Anchor& a);
void from_json(const Json& j, Anchor& a);
void to_json(Json& j, const ContentBlock& b);
void from_json(const Json& j, ContentBlock& b);
void to_json(Json& j, const Content& c);
void from_json(const Json& j, Content& c);
void to_json(Json& j, const Annotation& a);
void from_json(const Json& j, Annotation& a);
void to_json(Json& j, const Activity& a);
void from_json(const Json& j, Activity& a);
void to_json(Json& j, const GradeRecord& g);
void from_json(const Json& j, GradeRecord& g);

/// Query as structured JSON plus its canonical text form.
Json query_to_json(const Query& q, const Ontology& o);

/// Converts a JSON value into T, reporting shape mismatches as Validation
/// errors instead of library exceptions.
template <typename T>
T decode(const Json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed ") + what + ": " + e.what());
  }
}

Json parse_json(std::string_view text, const char* what);

/// Rounds to four decimals for report export.
double round4(double x);

}  // namespace ontonote

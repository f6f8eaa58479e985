#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "sms/core/model.hpp"

namespace sms {

// Canonical structured-text form of every record: a JSON object with fixed
// field names, RFC-3339 UTC timestamps, enums as lower-case strings, absent
// optionals omitted. Object keys are emitted in sorted order, so dump() of
// the same record is byte-identical. Decoding is strict: unknown keys and
// type mismatches raise Error(bad_request) naming the JSON pointer.
using Json = nlohmann::json;

Json encode(const Entity& entity);
// Uses the "kind" member of `j`.
Entity decode_entity(const Json& j);
Entity decode_entity(const Json& j, EntityKind kind);

Json encode(const TimeInterval& v);
Json encode(const EntityRef& v);
Json encode(const MeasuredQuantity& v);
Json encode(const ContactRole& v);
Json encode(const Parameter& v);
Json encode(const ParameterValue& v);
Json encode(const CustomField& v);
Json encode(const Attachment& v);
Json encode(const GenericAction& v);
Json encode(const Offset& v);
Json encode(const MountAction& v);
Json encode(const LocationAction& v);
Json encode(const GeoPoint& v);

void decode(const Json& j, const std::string& path, TimeInstant& out);
void decode(const Json& j, const std::string& path, TimeInterval& out);
void decode(const Json& j, const std::string& path, EntityRef& out);
void decode(const Json& j, const std::string& path, MeasuredQuantity& out);
void decode(const Json& j, const std::string& path, ContactRole& out);
void decode(const Json& j, const std::string& path, Parameter& out);
void decode(const Json& j, const std::string& path, ParameterValue& out);
void decode(const Json& j, const std::string& path, CustomField& out);
void decode(const Json& j, const std::string& path, Attachment& out);
void decode(const Json& j, const std::string& path, GenericAction& out);
void decode(const Json& j, const std::string& path, Offset& out);
void decode(const Json& j, const std::string& path, MountAction& out);
void decode(const Json& j, const std::string& path, LocationAction& out);
void decode(const Json& j, const std::string& path, GeoPoint& out);

template <class T>
T decode_as(const Json& j, const std::string& path = "") {
  T out{};
  decode(j, path, out);
  return out;
}

}  // namespace sms

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sms/core/ids.hpp"
#include "sms/core/time.hpp"

namespace sms {

// Reference to a vocabulary term by its id.
using TermRef = EntityId;

// private: owner group only; internal: any authenticated principal;
// public: anyone.
enum class Visibility { private_, internal, public_ };

std::string_view to_string(Visibility v);
std::optional<Visibility> visibility_from_string(std::string_view s);

// Audit fields shared by every entity record.
struct RecordInfo {
  EntityId id;
  TimeInstant created_at;
  TimeInstant updated_at;
  std::optional<EntityId> created_by;
  std::optional<EntityId> updated_by;
  std::int64_t version = 0;
  bool archived = false;

  friend bool operator==(const RecordInfo&, const RecordInfo&) = default;
};

struct MeasuredQuantity {
  EntityId id;
  TermRef compartment;
  TermRef sampling_media;
  TermRef quantity;
  TermRef unit;
  std::optional<double> range_min;
  std::optional<double> range_max;
  std::optional<double> accuracy;
  std::optional<TermRef> accuracy_unit;
  std::optional<double> resolution;
  std::optional<TermRef> resolution_unit;
  std::string label;

  friend bool operator==(const MeasuredQuantity&, const MeasuredQuantity&) = default;
};

struct ContactRole {
  EntityId contact;
  TermRef role;

  friend bool operator==(const ContactRole&, const ContactRole&) = default;
};

struct ParameterValue {
  TimeInstant at;
  std::string value;
  std::optional<EntityId> contact;

  friend bool operator==(const ParameterValue&, const ParameterValue&) = default;
};

struct Parameter {
  EntityId id;
  std::string label;
  std::string description;
  std::optional<TermRef> unit;
  std::vector<ParameterValue> values;  // sorted by `at`

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

struct CustomField {
  std::string key;
  std::string value;

  friend bool operator==(const CustomField&, const CustomField&) = default;
};

enum class AttachmentOrigin { file, url };

struct Attachment {
  EntityId id;
  std::string label;
  AttachmentOrigin origin = AttachmentOrigin::url;
  std::optional<std::string> url;       // iff origin == url
  std::optional<std::string> blob_ref;  // content hash, iff origin == file
  std::string media_type;
  bool is_preview_image = false;
  TimeInstant uploaded_at;
  std::optional<EntityId> uploaded_by;

  friend bool operator==(const Attachment&, const Attachment&) = default;
};

struct GenericAction {
  EntityId id;
  TermRef kind;  // category action_type
  std::variant<TimeInstant, TimeInterval> when;
  std::string description;
  std::optional<EntityId> contact;
  std::vector<EntityId> attachments;  // ids of the owning record's attachments

  TimeInstant begin() const;

  friend bool operator==(const GenericAction&, const GenericAction&) = default;
};

// Metres in the local east/north/up frame of the parent.
struct Offset {
  double x = 0;
  double y = 0;
  double z = 0;

  Offset& operator+=(const Offset& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend bool operator==(const Offset&, const Offset&) = default;
};

struct MountAction {
  EntityId id;
  EntityRef child;                  // device or platform
  std::optional<EntityRef> parent;  // platform; nullopt = configuration root
  TimeInterval interval;
  Offset offset;
  std::optional<Offset> absolute_offset;  // relative to the configuration location
  std::optional<EntityId> begin_contact;
  std::optional<EntityId> end_contact;
  std::string begin_description;
  std::string end_description;

  friend bool operator==(const MountAction&, const MountAction&) = default;
};

struct StaticLocation {
  double latitude = 0;
  double longitude = 0;
  double height = 0;
  std::string epsg_code;

  friend bool operator==(const StaticLocation&, const StaticLocation&) = default;
};

// Points at a measured quantity of a device mounted in the configuration.
struct QuantityRef {
  EntityId device;
  EntityId measured_quantity;

  friend bool operator==(const QuantityRef&, const QuantityRef&) = default;
};

struct DynamicLocation {
  QuantityRef x_source;
  QuantityRef y_source;
  QuantityRef z_source;

  friend bool operator==(const DynamicLocation&, const DynamicLocation&) = default;
};

struct LocationAction {
  EntityId id;
  TimeInterval interval;
  std::variant<StaticLocation, DynamicLocation> location;
  std::string label;
  std::optional<EntityId> contact;

  friend bool operator==(const LocationAction&, const LocationAction&) = default;
};

struct Device {
  RecordInfo info;
  std::string short_name;
  std::string description;
  std::string urn;
  std::optional<std::string> pid;
  std::optional<TermRef> device_type;
  std::optional<TermRef> manufacturer;
  std::string model;
  std::string serial_number;
  std::string inventory_number;
  Visibility visibility = Visibility::internal;
  GroupId owner_group;
  std::vector<MeasuredQuantity> measured_quantities;
  std::vector<ContactRole> contacts;
  std::vector<Parameter> parameters;
  std::vector<CustomField> custom_fields;
  std::vector<Attachment> attachments;
  std::vector<GenericAction> actions;

  friend bool operator==(const Device&, const Device&) = default;
};

struct Platform {
  RecordInfo info;
  std::string short_name;
  std::string description;
  std::string urn;
  std::optional<std::string> pid;
  std::optional<TermRef> platform_type;
  std::optional<TermRef> manufacturer;
  std::string model;
  std::string serial_number;
  std::string inventory_number;
  Visibility visibility = Visibility::internal;
  GroupId owner_group;
  std::vector<ContactRole> contacts;
  std::vector<Parameter> parameters;
  std::vector<CustomField> custom_fields;
  std::vector<Attachment> attachments;
  std::vector<GenericAction> actions;

  friend bool operator==(const Platform&, const Platform&) = default;
};

enum class ConfigurationStatus { draft, active, deprecated };

std::string_view to_string(ConfigurationStatus s);
std::optional<ConfigurationStatus> configuration_status_from_string(std::string_view s);

struct Configuration {
  RecordInfo info;
  std::string label;
  std::string description;
  std::optional<std::string> pid;
  ConfigurationStatus status = ConfigurationStatus::draft;
  std::optional<EntityId> site;
  std::string project;
  Visibility visibility = Visibility::internal;
  GroupId owner_group;
  std::vector<ContactRole> contacts;
  std::vector<Parameter> parameters;
  std::vector<CustomField> custom_fields;
  std::vector<Attachment> attachments;
  std::vector<GenericAction> actions;
  std::vector<MountAction> mount_actions;
  std::vector<LocationAction> location_actions;

  friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct GeoPoint {
  double latitude = 0;
  double longitude = 0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct Site {
  RecordInfo info;
  std::string label;
  std::string description;
  std::vector<GeoPoint> geometry;  // empty = no polygon
  std::optional<EntityId> parent_site;
  std::optional<TermRef> usage;
  Visibility visibility = Visibility::internal;
  GroupId owner_group;
  std::vector<ContactRole> contacts;
  std::vector<Attachment> attachments;

  friend bool operator==(const Site&, const Site&) = default;
};

struct Contact {
  RecordInfo info;
  std::string given_name;
  std::string family_name;
  std::string email;
  std::string organization;
  std::optional<std::string> orcid;
  std::optional<AccountId> account;

  friend bool operator==(const Contact&, const Contact&) = default;
};

using Entity = std::variant<Device, Platform, Configuration, Site, Contact>;

EntityKind kind_of(const Entity& e);
RecordInfo& info_of(Entity& e);
const RecordInfo& info_of(const Entity& e);
EntityRef ref_of(const Entity& e);

// short_name for equipment, label for configurations/sites, email for
// contacts. Natural keys are unique per kind.
const std::string& natural_key(const Entity& e);
// Human-readable name used for ordering and display.
std::string display_name(const Entity& e);

// Contacts carry no visibility of their own and are readable by any
// authenticated principal.
Visibility visibility_of(const Entity& e);
const GroupId* owner_group_of(const Entity& e);

const std::vector<ContactRole>* contacts_of(const Entity& e);
std::vector<ContactRole>* contacts_of(Entity& e);
std::vector<Parameter>* parameters_of(Entity& e);
const std::vector<Parameter>* parameters_of(const Entity& e);
std::vector<Attachment>* attachments_of(Entity& e);
const std::vector<Attachment>* attachments_of(const Entity& e);
std::vector<GenericAction>* actions_of(Entity& e);
const std::vector<GenericAction>* actions_of(const Entity& e);
std::optional<std::string>* pid_of(Entity& e);
const std::optional<std::string>* pid_of(const Entity& e);

Entity make_empty(EntityKind kind);

// "{base}/{plural}/{id}"; depends on nothing but the id.
std::string canonical_url(std::string_view base_url, const EntityRef& ref);

}  // namespace sms

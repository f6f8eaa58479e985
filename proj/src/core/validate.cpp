#include "sms/core/validate.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace sms {

namespace {

std::string at(const std::string& base, std::string_view field) { return base + "/" + std::string(field); }
std::string at(const std::string& base, std::size_t index) { return base + "/" + std::to_string(index); }

void require_text(std::string_view value, const std::string& path, ValidationReport& r) {
  if (is_blank(value)) r.add(path, "required", "must not be empty");
}

void require_ref(const EntityId& ref, const std::string& path, ValidationReport& r) {
  if (ref.empty()) r.add(path, "required", "must reference a vocabulary term");
}

void validate_info(const RecordInfo& info, ValidationReport& r) {
  if (info.updated_at < info.created_at) r.add("/updated_at", "timestamps", "updated_at >= created_at");
  if (info.version < 0) r.add("/version", "range", "version must not be negative");
}

void validate_owner(const GroupId& group, ValidationReport& r) {
  if (group.empty()) r.add("/owner_group", "required", "owner group is required");
}

template <class T>
void check_unique_ids(const std::vector<T>& items, const std::string& path, ValidationReport& r) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& id = items[i].id.value;
    if (id.empty()) continue;
    if (!seen.insert(id).second) r.add(at(at(path, i), "id"), "duplicate", "duplicate id " + id);
  }
}

void validate_contacts(const std::vector<ContactRole>& contacts, ValidationReport& r) {
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    auto p = at("/contacts", i);
    if (contacts[i].contact.empty()) r.add(at(p, "contact"), "required", "contact is required");
    if (contacts[i].role.empty()) r.add(at(p, "role"), "required", "role is required");
    if (!seen.insert({contacts[i].contact.value, contacts[i].role.value}).second) {
      r.add(p, "duplicate", "(contact, role) pairs must be unique");
    }
  }
}

void validate_parameters(const std::vector<Parameter>& params, ValidationReport& r) {
  check_unique_ids(params, "/parameters", r);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = at("/parameters", i);
    require_text(params[i].label, at(p, "label"), r);
    const auto& values = params[i].values;
    for (std::size_t j = 1; j < values.size(); ++j) {
      if (!(values[j - 1].at < values[j].at)) {
        r.add(at(at(at(p, "values"), j), "at"), "unsorted",
              "value changes must be sorted by timestamp with at most one per instant");
      }
    }
  }
}

void validate_attachments(const std::vector<Attachment>& attachments, ValidationReport& r) {
  check_unique_ids(attachments, "/attachments", r);
  for (std::size_t i = 0; i < attachments.size(); ++i) {
    const auto& a = attachments[i];
    auto p = at("/attachments", i);
    require_text(a.label, at(p, "label"), r);
    bool file = a.origin == AttachmentOrigin::file;
    bool ok = file ? (a.blob_ref && !a.blob_ref->empty() && !a.url)
                   : (a.url && !a.url->empty() && !a.blob_ref);
    if (!ok) {
      r.add(at(p, file ? "blob_ref" : "url"), "attachment_origin",
            "exactly one of url / blob_ref must be set, matching origin");
    } else if (!file && a.url->find("://") == std::string::npos) {
      r.add(at(p, "url"), "url", "url must be absolute");
    }
  }
}

void validate_actions(const std::vector<GenericAction>& actions, const std::vector<Attachment>& attachments,
                      ValidationReport& r) {
  check_unique_ids(actions, "/actions", r);
  std::set<std::string> attachment_ids;
  for (const auto& a : attachments) attachment_ids.insert(a.id.value);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto& a = actions[i];
    auto p = at("/actions", i);
    require_ref(a.kind, at(p, "kind"), r);
    if (const auto* interval = std::get_if<TimeInterval>(&a.when)) {
      validate_interval(*interval, at(p, "when"), r);
    }
    for (std::size_t j = 0; j < a.attachments.size(); ++j) {
      if (!attachment_ids.count(a.attachments[j].value)) {
        r.add(at(at(p, "attachments"), j), "unknown_attachment",
              "action attachment must reference an attachment of the same record");
      }
    }
  }
}

void check_lat_lon(double lat, double lon, const std::string& p, ValidationReport& r) {
  if (!(lat >= -90 && lat <= 90)) r.add(at(p, "latitude"), "latitude", "latitude must lie in [-90, 90]");
  if (!(lon >= -180 && lon <= 180)) r.add(at(p, "longitude"), "longitude", "longitude must lie in [-180, 180]");
}

void check_quantity_ref(const QuantityRef& q, const std::string& p, ValidationReport& r) {
  if (q.device.empty() || q.measured_quantity.empty()) {
    r.add(p, "required", "dynamic location source must name a device and a measured quantity");
  }
}

void validate(const Device& d, ValidationReport& r) {
  validate_info(d.info, r);
  require_text(d.short_name, "/short_name", r);
  validate_owner(d.owner_group, r);
  check_unique_ids(d.measured_quantities, "/measured_quantities", r);
  for (std::size_t i = 0; i < d.measured_quantities.size(); ++i) {
    validate_measured_quantity(d.measured_quantities[i], at("/measured_quantities", i), r);
  }
  validate_contacts(d.contacts, r);
  validate_parameters(d.parameters, r);
  validate_attachments(d.attachments, r);
  validate_actions(d.actions, d.attachments, r);
}

void validate(const Platform& p, ValidationReport& r) {
  validate_info(p.info, r);
  require_text(p.short_name, "/short_name", r);
  validate_owner(p.owner_group, r);
  validate_contacts(p.contacts, r);
  validate_parameters(p.parameters, r);
  validate_attachments(p.attachments, r);
  validate_actions(p.actions, p.attachments, r);
}

void validate(const Configuration& c, ValidationReport& r) {
  validate_info(c.info, r);
  require_text(c.label, "/label", r);
  validate_owner(c.owner_group, r);
  validate_contacts(c.contacts, r);
  validate_parameters(c.parameters, r);
  validate_attachments(c.attachments, r);
  validate_actions(c.actions, c.attachments, r);
  check_unique_ids(c.mount_actions, "/mount_actions", r);
  for (std::size_t i = 0; i < c.mount_actions.size(); ++i) {
    validate_mount(c.mount_actions[i], at("/mount_actions", i), r);
  }
  check_unique_ids(c.location_actions, "/location_actions", r);
  for (std::size_t i = 0; i < c.location_actions.size(); ++i) {
    validate_location(c.location_actions[i], at("/location_actions", i), r);
  }
  for (std::size_t i = 0; i < c.location_actions.size(); ++i) {
    for (std::size_t j = i + 1; j < c.location_actions.size(); ++j) {
      const auto& a = c.location_actions[i].interval;
      const auto& b = c.location_actions[j].interval;
      if (a.is_valid() && b.is_valid() && std::max(a.begin, b.begin) < std::min(a.end_or_max(), b.end_or_max())) {
        r.add(at(at("/location_actions", j), "interval"), "overlap",
              "location intervals of one configuration must not overlap");
      }
    }
  }
}

void validate(const Site& s, ValidationReport& r) {
  validate_info(s.info, r);
  require_text(s.label, "/label", r);
  validate_owner(s.owner_group, r);
  if (!s.geometry.empty() && s.geometry.size() < 3) {
    r.add("/geometry", "polygon", "polygon needs at least 3 vertices");
  }
  for (std::size_t i = 0; i < s.geometry.size(); ++i) {
    check_lat_lon(s.geometry[i].latitude, s.geometry[i].longitude, at("/geometry", i), r);
  }
  if (s.parent_site && !s.info.id.empty() && *s.parent_site == s.info.id) {
    r.add("/parent_site", "cycle", "a site cannot be its own parent");
  }
  validate_contacts(s.contacts, r);
  validate_attachments(s.attachments, r);
}

void validate(const Contact& c, ValidationReport& r) {
  validate_info(c.info, r);
  require_text(c.given_name, "/given_name", r);
  require_text(c.family_name, "/family_name", r);
  if (!is_valid_email(c.email)) r.add("/email", "email", "email must be syntactically valid");
}

}  // namespace

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

bool is_valid_email(std::string_view email) {
  auto at_pos = email.find('@');
  if (at_pos == std::string_view::npos || at_pos == 0 || email.find('@', at_pos + 1) != std::string_view::npos) {
    return false;
  }
  auto domain = email.substr(at_pos + 1);
  auto dot = domain.find('.');
  if (dot == std::string_view::npos || dot == 0 || domain.back() == '.') return false;
  return std::none_of(email.begin(), email.end(), [](unsigned char c) { return std::isspace(c); });
}

void validate_interval(const TimeInterval& interval, const std::string& path, ValidationReport& report) {
  if (!interval.is_valid()) report.add(path, "interval_order", "begin < end");
}

void validate_measured_quantity(const MeasuredQuantity& mq, const std::string& p, ValidationReport& r) {
  require_ref(mq.compartment, at(p, "compartment"), r);
  require_ref(mq.sampling_media, at(p, "sampling_media"), r);
  require_ref(mq.quantity, at(p, "quantity"), r);
  require_ref(mq.unit, at(p, "unit"), r);
  if (mq.range_min && mq.range_max && !(*mq.range_min <= *mq.range_max)) {
    r.add(at(p, "range_min"), "range_order", "range_min ≤ range_max");
  }
  if (mq.accuracy && !(*mq.accuracy >= 0)) r.add(at(p, "accuracy"), "non_negative", "accuracy must be >= 0");
  if (mq.resolution && !(*mq.resolution >= 0)) {
    r.add(at(p, "resolution"), "non_negative", "resolution must be >= 0");
  }
}

void validate_mount(const MountAction& m, const std::string& p, ValidationReport& r) {
  if (m.child.id.empty()) r.add(at(p, "child"), "required", "mount child is required");
  if (m.child.kind != EntityKind::device && m.child.kind != EntityKind::platform) {
    r.add(at(p, "child"), "mount_kind", "only devices and platforms can be mounted");
  }
  if (m.parent) {
    if (m.parent->kind != EntityKind::platform) {
      r.add(at(p, "parent"), "mount_kind", "mount parent must be a platform or the configuration root");
    }
    if (m.parent->id == m.child.id) r.add(at(p, "parent"), "self_mount", "child must differ from parent");
  }
  validate_interval(m.interval, at(p, "interval"), r);
}

void validate_location(const LocationAction& l, const std::string& p, ValidationReport& r) {
  validate_interval(l.interval, at(p, "interval"), r);
  if (const auto* s = std::get_if<StaticLocation>(&l.location)) {
    check_lat_lon(s->latitude, s->longitude, p, r);
  } else {
    const auto& d = std::get<DynamicLocation>(l.location);
    check_quantity_ref(d.x_source, at(p, "x_source"), r);
    check_quantity_ref(d.y_source, at(p, "y_source"), r);
    check_quantity_ref(d.z_source, at(p, "z_source"), r);
  }
}

ValidationReport validate_record(const Entity& entity) {
  ValidationReport report;
  std::visit([&](const auto& record) { validate(record, report); }, entity);
  return report;
}

}  // namespace sms

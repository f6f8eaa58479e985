#pragma once

// Random record generators shared by the property tests.

#include <random>
#include <string>

#include "sms/core/model.hpp"

namespace sms::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  std::string word(int min_len = 1, int max_len = 10) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 -_°é";
    int len = integer(min_len, max_len);
    std::string out;
    while (static_cast<int>(out.size()) < len) {
      char c = alphabet[integer(0, sizeof(alphabet) - 2)];
      if (static_cast<unsigned char>(c) >= 0x80) continue;  // keep strings valid UTF-8
      out += c;
    }
    if (out.front() == ' ') out.front() = 'x';
    return out;
  }

  std::string id(char prefix) { return std::string(1, prefix) + std::to_string(integer(1, 100000)); }

  TimeInstant instant() {
    // 2015-01-01 .. 2025-01-01, microsecond resolution
    std::int64_t lo = 1420070400LL * 1'000'000, hi = 1735689600LL * 1'000'000;
    return TimeInstant::from_micros(std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_));
  }

  TimeInterval interval() {
    auto a = instant();
    if (coin()) return {a, std::nullopt};
    auto b = a.plus_seconds(integer(1, 86400 * 400));
    return {a, b};
  }

  template <class T>
  std::optional<T> maybe(T v) {
    return coin() ? std::optional<T>(std::move(v)) : std::nullopt;
  }

  RecordInfo info(char prefix) {
    RecordInfo info;
    info.id = EntityId{id(prefix)};
    info.created_at = instant();
    info.updated_at = info.created_at.plus_seconds(integer(0, 1000));
    info.created_by = maybe(EntityId{id('k')});
    info.updated_by = maybe(EntityId{id('k')});
    info.version = integer(1, 20);
    info.archived = integer(0, 9) == 0;
    return info;
  }

  MeasuredQuantity measured_quantity() {
    MeasuredQuantity mq;
    mq.id = EntityId{id('q')};
    mq.compartment = EntityId{id('v')};
    mq.sampling_media = EntityId{id('v')};
    mq.quantity = EntityId{id('v')};
    mq.unit = EntityId{id('v')};
    double a = real(-100, 100), b = real(-100, 100);
    if (coin()) mq.range_min = std::min(a, b);
    if (coin()) mq.range_max = std::max(a, b);
    mq.accuracy = maybe(real(0, 5));
    mq.accuracy_unit = maybe(EntityId{id('v')});
    mq.resolution = maybe(real(0, 1));
    mq.resolution_unit = maybe(EntityId{id('v')});
    mq.label = word(0, 12);
    return mq;
  }

  std::vector<ContactRole> contacts() {
    std::vector<ContactRole> out;
    int n = integer(0, 3);
    for (int i = 0; i < n; ++i) out.push_back({EntityId{"k" + std::to_string(i + 1)}, EntityId{id('v')}});
    return out;
  }

  std::vector<Parameter> parameters() {
    std::vector<Parameter> out;
    int n = integer(0, 2);
    for (int i = 0; i < n; ++i) {
      Parameter p;
      p.id = EntityId{"r" + std::to_string(i + 1)};
      p.label = word(1, 12);
      p.description = word(0, 20);
      p.unit = maybe(EntityId{id('v')});
      auto t = instant();
      int values = integer(0, 3);
      for (int j = 0; j < values; ++j) {
        t = t.plus_seconds(integer(1, 100000));
        p.values.push_back({t, word(1, 6), maybe(EntityId{id('k')})});
      }
      out.push_back(std::move(p));
    }
    return out;
  }

  std::vector<CustomField> custom_fields() {
    std::vector<CustomField> out;
    int n = integer(0, 2);
    for (int i = 0; i < n; ++i) out.push_back({word(1, 8), word(0, 8)});
    return out;
  }

  std::vector<Attachment> attachments() {
    std::vector<Attachment> out;
    int n = integer(0, 2);
    for (int i = 0; i < n; ++i) {
      Attachment a;
      a.id = EntityId{"a" + std::to_string(i + 1)};
      a.label = word(1, 10);
      if (coin()) {
        a.origin = AttachmentOrigin::url;
        a.url = "https://example.org/" + std::to_string(integer(1, 999));
      } else {
        a.origin = AttachmentOrigin::file;
        a.blob_ref = std::string(64, 'a');
      }
      a.media_type = coin() ? "image/png" : "application/pdf";
      a.is_preview_image = coin();
      a.uploaded_at = instant();
      a.uploaded_by = maybe(EntityId{id('k')});
      out.push_back(std::move(a));
    }
    return out;
  }

  std::vector<GenericAction> actions(const std::vector<Attachment>& attachments) {
    std::vector<GenericAction> out;
    int n = integer(0, 2);
    for (int i = 0; i < n; ++i) {
      GenericAction a;
      a.id = EntityId{"e" + std::to_string(i + 1)};
      a.kind = EntityId{id('v')};
      if (coin()) {
        a.when = instant();
      } else {
        a.when = interval();
      }
      a.description = word(0, 20);
      a.contact = maybe(EntityId{id('k')});
      if (!attachments.empty() && coin()) a.attachments.push_back(attachments.front().id);
      out.push_back(std::move(a));
    }
    return out;
  }

  Visibility visibility() { return static_cast<Visibility>(integer(0, 2)); }

  Device device() {
    Device d;
    d.info = info('d');
    d.short_name = word(1, 16);
    d.description = word(0, 30);
    d.urn = word(0, 10);
    d.pid = maybe(std::string("21.T11998/") + word(4, 8));
    d.device_type = maybe(EntityId{id('v')});
    d.manufacturer = maybe(EntityId{id('v')});
    d.model = word(0, 8);
    d.serial_number = word(0, 8);
    d.inventory_number = word(0, 8);
    d.visibility = visibility();
    d.owner_group = GroupId{"g" + std::to_string(integer(1, 5))};
    int mqs = integer(0, 3);
    for (int i = 0; i < mqs; ++i) {
      d.measured_quantities.push_back(measured_quantity());
      d.measured_quantities.back().id = EntityId{"q" + std::to_string(i + 1)};
    }
    d.contacts = contacts();
    d.parameters = parameters();
    d.custom_fields = custom_fields();
    d.attachments = attachments();
    d.actions = actions(d.attachments);
    return d;
  }

  Platform platform() {
    Platform p;
    p.info = info('p');
    p.short_name = word(1, 16);
    p.description = word(0, 30);
    p.urn = word(0, 10);
    p.pid = maybe(std::string("21.T11998/") + word(4, 8));
    p.platform_type = maybe(EntityId{id('v')});
    p.manufacturer = maybe(EntityId{id('v')});
    p.model = word(0, 8);
    p.serial_number = word(0, 8);
    p.inventory_number = word(0, 8);
    p.visibility = visibility();
    p.owner_group = GroupId{"g1"};
    p.contacts = contacts();
    p.parameters = parameters();
    p.custom_fields = custom_fields();
    p.attachments = attachments();
    p.actions = actions(p.attachments);
    return p;
  }

  MountAction mount(int index) {
    MountAction m;
    m.id = EntityId{"m" + std::to_string(index)};
    m.child = EntityRef{coin() ? EntityKind::device : EntityKind::platform, EntityId{id('d')}};
    if (coin()) m.parent = EntityRef{EntityKind::platform, EntityId{id('p')}};
    m.interval = interval();
    m.offset = Offset{real(-5, 5), real(-5, 5), real(-5, 5)};
    if (coin()) m.absolute_offset = Offset{real(-5, 5), real(-5, 5), real(-5, 5)};
    m.begin_contact = maybe(EntityId{id('k')});
    m.end_contact = maybe(EntityId{id('k')});
    m.begin_description = word(0, 10);
    m.end_description = word(0, 10);
    return m;
  }

  Configuration configuration() {
    Configuration c;
    c.info = info('c');
    c.label = word(1, 16);
    c.description = word(0, 30);
    c.pid = maybe(std::string("21.T11998/") + word(4, 8));
    c.status = static_cast<ConfigurationStatus>(integer(0, 2));
    c.site = maybe(EntityId{id('s')});
    c.project = word(0, 8);
    c.visibility = visibility();
    c.owner_group = GroupId{"g2"};
    c.contacts = contacts();
    c.parameters = parameters();
    c.custom_fields = custom_fields();
    c.attachments = attachments();
    c.actions = actions(c.attachments);
    int mounts = integer(0, 3);
    for (int i = 0; i < mounts; ++i) c.mount_actions.push_back(mount(i + 1));
    // sequential, non-overlapping locations
    auto t = instant();
    int locations = integer(0, 2);
    for (int i = 0; i < locations; ++i) {
      LocationAction l;
      l.id = EntityId{"l" + std::to_string(i + 1)};
      auto end = t.plus_seconds(integer(1, 100000));
      l.interval = {t, end};
      t = end;
      if (coin()) {
        l.location = StaticLocation{real(-90, 90), real(-180, 180), real(0, 3000), "EPSG:4326"};
      } else {
        l.location = DynamicLocation{{EntityId{"d1"}, EntityId{"q1"}},
                                     {EntityId{"d1"}, EntityId{"q2"}},
                                     {EntityId{"d1"}, EntityId{"q3"}}};
      }
      l.label = word(0, 8);
      l.contact = maybe(EntityId{id('k')});
      c.location_actions.push_back(std::move(l));
    }
    return c;
  }

  Site site() {
    Site s;
    s.info = info('s');
    s.label = word(1, 16);
    s.description = word(0, 30);
    if (coin()) {
      int n = integer(3, 6);
      for (int i = 0; i < n; ++i) s.geometry.push_back({real(-90, 90), real(-180, 180)});
    }
    s.parent_site = maybe(EntityId{"s" + std::to_string(integer(100001, 200000))});
    s.usage = maybe(EntityId{id('v')});
    s.visibility = visibility();
    s.owner_group = GroupId{"g3"};
    s.contacts = contacts();
    s.attachments = attachments();
    return s;
  }

  Contact contact() {
    Contact c;
    c.info = info('k');
    c.given_name = word(1, 10);
    c.family_name = word(1, 10);
    c.email = "user" + std::to_string(integer(1, 100000)) + "@example.org";
    c.organization = word(0, 12);
    c.orcid = maybe(std::string("0000-0002-1825-0097"));
    c.account = maybe(AccountId{"u" + std::to_string(integer(1, 100))});
    return c;
  }

  Entity entity() {
    switch (integer(0, 4)) {
      case 0: return device();
      case 1: return platform();
      case 2: return configuration();
      case 3: return site();
      default: return contact();
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace sms::testing

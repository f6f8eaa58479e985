#include <doctest.h>

#include <functional>

#include "sms/core/codec.hpp"
#include "sms/core/errors.hpp"
#include "sms/core/validate.hpp"
#include "support/generators.hpp"

using namespace sms;

namespace {

TermRef term(const char* id) { return TermRef{id}; }

Device climavue() {
  Device d;
  d.short_name = "ClimaVUE50-001";
  d.owner_group = GroupId{"ufz"};
  MeasuredQuantity mq;
  mq.compartment = term("v1");
  mq.sampling_media = term("v2");
  mq.quantity = term("v3");
  mq.unit = term("v4");
  mq.range_min = -50;
  mq.range_max = 60;
  mq.accuracy = 0.6;
  mq.accuracy_unit = term("v4");
  mq.resolution = 0.1;
  mq.resolution_unit = term("v4");
  d.measured_quantities.push_back(mq);
  return d;
}

}  // namespace

TEST_CASE("validate_record examples") {
  CHECK(validate_record(climavue()).ok());

  auto swapped = climavue();
  swapped.measured_quantities[0].range_min = 60;
  swapped.measured_quantities[0].range_max = -50;
  auto report = validate_record(swapped);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].path == "/measured_quantities/0/range_min");
  CHECK(report.violations[0].message == "range_min ≤ range_max");

  Configuration c;
  c.label = "station";
  c.owner_group = GroupId{"ufz"};
  MountAction m;
  m.child = {EntityKind::device, EntityId{"d1"}};
  m.interval = {TimeInstant::parse("2020-01-01T00:00Z"), TimeInstant::parse("2020-01-01T00:00Z")};
  c.mount_actions.push_back(m);
  report = validate_record(c);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].message == "begin < end");
  CHECK(report.violations[0].path == "/mount_actions/0/interval");
}

TEST_CASE("device short name is required and blank names are rejected") {
  auto d = climavue();
  d.short_name = "   ";
  CHECK(validate_record(d).has("required"));
}

TEST_CASE("email syntax") {
  CHECK(is_valid_email("jane.doe@ufz.de"));
  CHECK_FALSE(is_valid_email("jane.doe"));
  CHECK_FALSE(is_valid_email("@ufz.de"));
  CHECK_FALSE(is_valid_email("a@b"));
  CHECK_FALSE(is_valid_email("a@@b.de"));
  CHECK_FALSE(is_valid_email("a b@c.de"));
}

namespace {

struct Corruption {
  const char* name;
  std::function<Entity(testing::Gen&)> make_valid;
  std::function<void(Entity&)> corrupt;
  std::string path;
  std::string code;
};

Device device_with_mq(testing::Gen& g) {
  auto d = g.device();
  d.measured_quantities = {g.measured_quantity()};
  d.measured_quantities[0].range_min = -10;
  d.measured_quantities[0].range_max = 10;
  return d;
}

Configuration configuration_with_mount(testing::Gen& g) {
  auto c = g.configuration();
  c.mount_actions = {g.mount(1)};
  c.mount_actions[0].parent = EntityRef{EntityKind::platform, EntityId{"p999999"}};
  c.location_actions.clear();
  return c;
}

std::vector<Corruption> corruptions() {
  auto dev = [](testing::Gen& g) -> Entity { return device_with_mq(g); };
  auto cfg = [](testing::Gen& g) -> Entity { return configuration_with_mount(g); };
  auto site = [](testing::Gen& g) -> Entity {
    auto s = g.site();
    s.geometry = {{1, 1}, {2, 2}, {3, 1}};
    return s;
  };
  auto contact = [](testing::Gen& g) -> Entity { return g.contact(); };
  return {
      {"short name", dev, [](Entity& e) { std::get<Device>(e).short_name.clear(); }, "/short_name", "required"},
      {"owner group", dev, [](Entity& e) { std::get<Device>(e).owner_group = GroupId{}; }, "/owner_group",
       "required"},
      {"range order", dev,
       [](Entity& e) {
         auto& mq = std::get<Device>(e).measured_quantities[0];
         std::swap(mq.range_min, mq.range_max);
       },
       "/measured_quantities/0/range_min", "range_order"},
      {"accuracy", dev, [](Entity& e) { std::get<Device>(e).measured_quantities[0].accuracy = -0.6; },
       "/measured_quantities/0/accuracy", "non_negative"},
      {"resolution", dev, [](Entity& e) { std::get<Device>(e).measured_quantities[0].resolution = -0.1; },
       "/measured_quantities/0/resolution", "non_negative"},
      {"unit", dev, [](Entity& e) { std::get<Device>(e).measured_quantities[0].unit = TermRef{}; },
       "/measured_quantities/0/unit", "required"},
      {"timestamps", dev,
       [](Entity& e) {
         auto& info = std::get<Device>(e).info;
         info.updated_at = info.created_at.plus_seconds(-1);
       },
       "/updated_at", "timestamps"},
      {"contact role pair", dev,
       [](Entity& e) {
         auto& d = std::get<Device>(e);
         d.contacts = {{EntityId{"k1"}, TermRef{"v1"}}, {EntityId{"k1"}, TermRef{"v1"}}};
       },
       "/contacts/1", "duplicate"},
      {"parameter order", dev,
       [](Entity& e) {
         auto& d = std::get<Device>(e);
         Parameter p;
         p.id = EntityId{"r77"};
         p.label = "cable length";
         auto t = TimeInstant::parse("2021-01-01");
         p.values = {{t, "2 m", {}}, {t, "3 m", {}}};
         d.parameters = {p};
       },
       "/parameters/0/values/1/at", "unsorted"},
      {"attachment origin", dev,
       [](Entity& e) {
         Attachment a;
         a.id = EntityId{"a9"};
         a.label = "manual";
         a.origin = AttachmentOrigin::url;
         a.url = "https://example.org/manual.pdf";
         a.blob_ref = std::string(64, 'f');
         auto& d = std::get<Device>(e);
         d.actions.clear();
         d.attachments = {a};
       },
       "/attachments/0/url", "attachment_origin"},
      {"action interval", dev,
       [](Entity& e) {
         auto& d = std::get<Device>(e);
         GenericAction a;
         a.id = EntityId{"e9"};
         a.kind = TermRef{"v5"};
         a.when = TimeInterval{TimeInstant::parse("2021-02-01"), TimeInstant::parse("2021-01-01")};
         d.actions = {a};
       },
       "/actions/0/when", "interval_order"},
      {"self mount", cfg,
       [](Entity& e) {
         auto& m = std::get<Configuration>(e).mount_actions[0];
         m.child.kind = EntityKind::platform;
         m.parent->id = m.child.id;
       },
       "/mount_actions/0/parent", "self_mount"},
      {"mount interval", cfg,
       [](Entity& e) {
         auto& m = std::get<Configuration>(e).mount_actions[0];
         m.interval.end = m.interval.begin;
       },
       "/mount_actions/0/interval", "interval_order"},
      {"location overlap", cfg,
       [](Entity& e) {
         auto& c = std::get<Configuration>(e);
         LocationAction a;
         a.id = EntityId{"l1"};
         a.interval = {TimeInstant::parse("2020-01-01"), std::nullopt};
         a.location = StaticLocation{49, 12, 440, "EPSG:4326"};
         auto b = a;
         b.id = EntityId{"l2"};
         b.interval = {TimeInstant::parse("2021-01-01"), TimeInstant::parse("2022-01-01")};
         c.location_actions = {a, b};
       },
       "/location_actions/1/interval", "overlap"},
      {"location latitude", cfg,
       [](Entity& e) {
         LocationAction a;
         a.id = EntityId{"l1"};
         a.interval = {TimeInstant::parse("2020-01-01"), std::nullopt};
         a.location = StaticLocation{95, 12, 440, "EPSG:4326"};
         std::get<Configuration>(e).location_actions = {a};
       },
       "/location_actions/0/latitude", "latitude"},
      {"polygon size", site, [](Entity& e) { std::get<Site>(e).geometry.pop_back(); }, "/geometry", "polygon"},
      {"polygon longitude", site, [](Entity& e) { std::get<Site>(e).geometry[1].longitude = 200; },
       "/geometry/1/longitude", "longitude"},
      {"site self parent", site,
       [](Entity& e) {
         auto& s = std::get<Site>(e);
         s.parent_site = s.info.id;
       },
       "/parent_site", "cycle"},
      {"email", contact, [](Entity& e) { std::get<Contact>(e).email = "not-an-email"; }, "/email", "email"},
      {"given name", contact, [](Entity& e) { std::get<Contact>(e).given_name.clear(); }, "/given_name",
       "required"},
  };
}

}  // namespace

TEST_CASE("property: corrupting one field yields exactly the matching violation") {
  testing::Gen gen(20240611);
  for (const auto& c : corruptions()) {
    for (int trial = 0; trial < 40; ++trial) {
      Entity e = c.make_valid(gen);
      auto baseline = validate_record(e);
      INFO(c.name, " baseline: ", baseline.summary());
      REQUIRE(baseline.violations.empty());
      c.corrupt(e);
      auto report = validate_record(e);
      INFO(c.name, " report: ", report.summary());
      REQUIRE(report.violations.size() == 1);
      CHECK(report.violations[0].path == c.path);
      CHECK(report.violations[0].code == c.code);
    }
  }
}

TEST_CASE("property: randomly generated records are valid and round-trip through the codec") {
  testing::Gen gen(99);
  for (int i = 0; i < 400; ++i) {
    Entity e = gen.entity();
    INFO("record: ", encode(e).dump());
    CHECK(validate_record(e).violations.empty());
    Json j = encode(e);
    Entity back = decode_entity(Json::parse(j.dump()));
    CHECK(back == e);
    CHECK(encode(back).dump() == j.dump());
  }
}

TEST_CASE("decoding is strict and reports the offending pointer") {
  Json j = encode(Entity{climavue()});
  j["measured_quantities"][0]["rangemin"] = 3;
  try {
    decode_entity(j);
    FAIL("expected decode failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::bad_request);
    CHECK(e.detail()["pointer"] == "/measured_quantities/0/rangemin");
  }

  Json bad_time = encode(Entity{climavue()});
  bad_time["created_at"] = "last tuesday";
  CHECK_THROWS_AS(decode_entity(bad_time), Error);

  Json wrong_kind = encode(Entity{climavue()});
  CHECK_THROWS_AS(decode_entity(wrong_kind, EntityKind::platform), Error);
}

TEST_CASE("natural id ordering") {
  CHECK(EntityId{"d9"} < EntityId{"d10"});
  CHECK(EntityId{"d10"} < EntityId{"p1"});
  CHECK(EntityId{"d010"} != EntityId{"d10"});
  CHECK(EntityId{"m1"} < EntityId{"m1a"});
}

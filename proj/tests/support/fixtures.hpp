#pragma once

// Small fixed vocabulary used across unit tests.

#include <vector>

#include "sms/vocabulary/vocabulary.hpp"

namespace sms::testing {

inline vocabulary::TermDraft draft(vocabulary::Category c, std::string term, std::string definition = {},
                                   std::optional<std::string> uri = std::nullopt) {
  vocabulary::TermDraft d;
  d.category = c;
  d.term = std::move(term);
  d.definition = std::move(definition);
  d.provenance_uri = std::move(uri);
  return d;
}

inline std::vector<vocabulary::TermDraft> seed_terms() {
  using C = vocabulary::Category;
  return {
      draft(C::unit, "°C", "degree Celsius", "http://qudt.org/vocab/unit/DEG_C"),
      draft(C::unit, "mm", "millimetre"),
      draft(C::unit, "%", "percent"),
      draft(C::unit, "m/s", "metre per second"),
      draft(C::measured_quantity, "Air temperature", "temperature of the surrounding air"),
      draft(C::measured_quantity, "Relative humidity", "ratio of water vapour pressure to saturation"),
      draft(C::measured_quantity, "Precipitation", "liquid water equivalent of falling precipitation"),
      draft(C::compartment, "Atmosphere"),
      draft(C::sampling_media, "Air"),
      draft(C::manufacturer, "Campbell Scientific"),
      draft(C::equipment_type, "Weather station"),
      draft(C::equipment_type, "Rain gauge"),
      draft(C::platform_type, "Tripod"),
      draft(C::contact_role, "Owner"),
      draft(C::contact_role, "PI"),
      draft(C::contact_role, "Technical Coordinator"),
      draft(C::action_type, "Maintenance"),
      draft(C::action_type, "Calibration"),
      draft(C::site_usage, "Field site"),
  };
}

inline void load_seed(vocabulary::Vocabulary& v) {
  for (const auto& d : seed_terms()) v.upsert_accepted(d);
}

}  // namespace sms::testing

#pragma once

#include <string>

#include "sms/core/model.hpp"
#include "sms/core/validation.hpp"

namespace sms {

// Checks every single-record invariant of `entity`. Cross-record rules
// (uniqueness, vocabulary references, temporal consistency across
// configurations) live in the store.
ValidationReport validate_record(const Entity& entity);

void validate_interval(const TimeInterval& interval, const std::string& path, ValidationReport& report);
void validate_measured_quantity(const MeasuredQuantity& mq, const std::string& path, ValidationReport& report);
void validate_mount(const MountAction& mount, const std::string& path, ValidationReport& report);
void validate_location(const LocationAction& location, const std::string& path, ValidationReport& report);

bool is_valid_email(std::string_view email);
bool is_blank(std::string_view s);

}  // namespace sms

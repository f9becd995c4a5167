#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bubblelab/bubble_detector.hpp"
#include "bubblelab/field_model.hpp"
#include "bubblelab/quantizer.hpp"
#include "bubblelab/radial_engine.hpp"

// JSON and CSV plumbing. Parsers reject unknown keys and wrong types with ConfigError;
// all doubles are written in shortest round-trip form.
namespace bubblelab::io {

std::string to_json(const FamilySpec& spec);
FamilySpec family_from_json(std::string_view text);

std::string to_json(const MassOptions& opts);
MassOptions mass_options_from_json(std::string_view text);

std::string to_json(const DetectorConfig& cfg);
DetectorConfig detector_config_from_json(std::string_view text);

std::string to_json(const QuantizeConfig& cfg);
QuantizeConfig quantize_config_from_json(std::string_view text);

/// Region as {"ball": {...}} | {"annulus": {...}} | {"ball_minus_balls": {...}}.
std::string to_json(const Region& region);
Region region_from_json(std::string_view text);

/// {beta, classification, energy, energy_error, min_lap, r_max, blowup_radius}.
std::string radial_summary_json(const RadialSolution& sol);

std::string to_json(const DetectionReport& report);
std::string to_json(const QuantizationReport& report);

struct MassRow {
    std::string family;
    int k = 0;
    std::string region;
    double value = 0.0;
    double abs_error = 0.0;
};

/// family,k,region,value,abs_error
std::string masses_csv(const std::vector<MassRow>& rows);

/// Strict double parse accepting "nan", "inf" and "-inf" as written by format_double.
double parse_double(std::string_view s);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::string_view name) const;
};

/// Plain comma-separated text without quoting, as emitted by this library.
CsvTable parse_csv(std::string_view text);

}  // namespace bubblelab::io

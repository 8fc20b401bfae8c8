#pragma once

#include <map>
#include <string>

namespace segmeta {

using Options = std::map<std::string, std::string>;

// Executes one named pipeline stage with key=value options. Stage names
// mirror the CLI subcommands (synth, predict, segments, metrics, train-meta,
// eval-meta, track, augment, compose, priors, cdf, render, pipeline).
// Unknown stages or option keys raise ValidationError.
void run_named_stage(const std::string& name, const Options& options);

}  // namespace segmeta

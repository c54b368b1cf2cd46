#pragma once

#include <string>
#include <string_view>

#include "scc/optimizers.hpp"

namespace scc {

enum class BaselineKind {
  fixed_mmse,  ///< initial transmit beams, MMSE receivers, one pass
  zfbf,        ///< singular-vector transmitters, zero-forcing receivers, one pass
  mfbf,        ///< the proposed loop with matched-filter receivers
  ufbf,        ///< uniform-forcing transmitters alternated with MMSE receivers
};

/// Which outer objective (and constraint set) a baseline is scored against.
enum class ObjectiveMode { cem, wsr };

struct BaselineVariant {
  BaselineKind kind = BaselineKind::fixed_mmse;
  ObjectiveMode objective_mode = ObjectiveMode::cem;
};

const char* to_string(BaselineKind kind);
const char* to_string(ObjectiveMode mode);

/// Accepts the CLI spellings fixed-mmse, zfbf, mfbf, ufbf (and fixed_mmse).
/// Throws ConfigError otherwise.
BaselineKind parse_baseline_kind(std::string_view name);

/// Runs one baseline. The trace objective is the AirComp MSE in cem mode and
/// the weighted sum-rate in wsr mode.
SolveOutcome run_baseline(const BaselineVariant& variant, const SystemConfig& config, const ChannelSet& ch,
                          const OptimizerOptions& opts);

/// Stream l of UE k on right singular vector l of H_k, sensing stream j on
/// vector L + j, with the initialization power split. Throws DimensionError
/// when L + J > M.
TransmitBeams singular_vector_transmit(const SystemConfig& config, const ChannelSet& ch);

/// Pseudo-inverse receivers for the given transmit beams: every stream's
/// receiver has unit response to its own signature and nulls all others.
/// Throws DimensionError when N < K (L + J).
ReceiveBeams zero_forcing_receivers(const TransmitBeams& tx, const ChannelSet& ch);

/// Equal effective gain per stream index across UEs: sensing stream j uses
/// the dominant right singular vector of H_k and is scaled so that
/// u_kj^H H_k v_kj equals the weakest UE's budget-capped gain; computation
/// stream l does the same against column l of Z on the second singular
/// vector (the first when M = 1).
TransmitBeams uniform_forcing_transmit(const SystemConfig& config, const ChannelSet& ch, const ReceiveBeams& rx);

}  // namespace scc

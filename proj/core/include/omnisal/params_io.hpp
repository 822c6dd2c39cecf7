#ifndef OMNISAL_PARAMS_IO_HPP
#define OMNISAL_PARAMS_IO_HPP

#include <string>

#include "omnisal/dwf.hpp"
#include "omnisal/fr.hpp"

namespace omnisal {

// Parameter sets are dumped as a directory of OMT1 tensors plus a
// manifest.json naming each weight: conv kernels as (out, in, 9), linear
// weights as (1, out, in), biases as (1, 1, n). Structural fields (widths,
// option flags, seed) live in the manifest.

void save_dwf_params(const std::string& dir, const DwfParams& params);
DwfParams load_dwf_params(const std::string& dir);

void save_fr_params(const std::string& dir, const FrParams& params);
FrParams load_fr_params(const std::string& dir);

} // namespace omnisal

#endif

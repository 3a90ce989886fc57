#ifndef DABLS_DABLS_HPP
#define DABLS_DABLS_HPP

#include "dabls/bls.hpp"
#include "dabls/config.hpp"
#include "dabls/core.hpp"
#include "dabls/da.hpp"
#include "dabls/dataio.hpp"
#include "dabls/harness.hpp"
#include "dabls/lle.hpp"
#include "dabls/serialize.hpp"

#endif  // DABLS_DABLS_HPP

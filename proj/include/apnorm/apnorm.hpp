#pragma once

#include "apnorm/acceptance.hpp"
#include "apnorm/ap_norm.hpp"
#include "apnorm/common.hpp"
#include "apnorm/growth.hpp"
#include "apnorm/lower_cert.hpp"
#include "apnorm/modulus.hpp"
#include "apnorm/oracles.hpp"
#include "apnorm/phase_analysis.hpp"
#include "apnorm/phases.hpp"
#include "apnorm/report.hpp"
#include "apnorm/run_config.hpp"
#include "apnorm/torus_spectra.hpp"
#include "apnorm/version.hpp"

#pragma once

// Distributionally robust classification: ERM, adversarial ERM with
// f-divergence reweighting, and structural adversarial ERM over latent
// categories, plus worst-case evaluation metrics.

#include "drobust/adversary.hpp"
#include "drobust/config.hpp"
#include "drobust/data.hpp"
#include "drobust/divergences.hpp"
#include "drobust/errors.hpp"
#include "drobust/experiment.hpp"
#include "drobust/linear_model.hpp"
#include "drobust/log.hpp"
#include "drobust/losses.hpp"
#include "drobust/metrics.hpp"
#include "drobust/reports.hpp"
#include "drobust/rng.hpp"
#include "drobust/trainer.hpp"

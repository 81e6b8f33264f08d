#pragma once

#include "sasmate/error.hpp"
#include "sasmate/elements.hpp"
#include "sasmate/formula.hpp"
#include "sasmate/sld.hpp"
#include "sasmate/numerics.hpp"
#include "sasmate/dataset.hpp"
#include "sasmate/models.hpp"
#include "sasmate/dataio.hpp"
#include "sasmate/fit.hpp"
#include "sasmate/docstore.hpp"
#include "sasmate/plot.hpp"
#include "sasmate/agent/messages.hpp"
#include "sasmate/agent/backend.hpp"
#include "sasmate/agent/settings.hpp"
#include "sasmate/agent/session.hpp"
#include "sasmate/agent/tools.hpp"
#include "sasmate/agent/scripted_backend.hpp"
#include "sasmate/agent/openai_backend.hpp"
#include "sasmate/agent/agents.hpp"
#include "sasmate/service.hpp"

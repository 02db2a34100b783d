#pragma once

#include "reeb_atlas/error.hpp"
#include "reeb_atlas/linalg.hpp"
#include "reeb_atlas/sampling.hpp"
#include "reeb_atlas/parallel.hpp"
#include "reeb_atlas/contact_core.hpp"
#include "reeb_atlas/flow.hpp"
#include "reeb_atlas/orbits.hpp"
#include "reeb_atlas/cz_index.hpp"
#include "reeb_atlas/link_topology.hpp"
#include "reeb_atlas/sections.hpp"
#include "reeb_atlas/binding_check.hpp"
#include "reeb_atlas/config.hpp"
#include "reeb_atlas/commands.hpp"

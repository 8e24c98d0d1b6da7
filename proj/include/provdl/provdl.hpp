#pragma once

#include "provdl/api.hpp"
#include "provdl/ast.hpp"
#include "provdl/database.hpp"
#include "provdl/engine.hpp"
#include "provdl/explorer.hpp"
#include "provdl/instance.hpp"
#include "provdl/join.hpp"
#include "provdl/oracle.hpp"
#include "provdl/parser.hpp"
#include "provdl/proof_tree.hpp"
#include "provdl/relation.hpp"
#include "provdl/render.hpp"
#include "provdl/repl.hpp"
#include "provdl/stratification.hpp"
#include "provdl/value.hpp"

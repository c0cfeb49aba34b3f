#pragma once

#include "topoinv/berry.hpp"
#include "topoinv/certify.hpp"
#include "topoinv/core.hpp"
#include "topoinv/io.hpp"
#include "topoinv/models.hpp"
#include "topoinv/pipeline.hpp"
#include "topoinv/transport.hpp"
#include "topoinv/wz.hpp"

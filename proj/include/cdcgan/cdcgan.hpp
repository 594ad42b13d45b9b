#ifndef CDCGAN_CDCGAN_HPP
#define CDCGAN_CDCGAN_HPP

#include "cdcgan/activation.hpp"
#include "cdcgan/adam.hpp"
#include "cdcgan/checkpoint.hpp"
#include "cdcgan/color.hpp"
#include "cdcgan/conv.hpp"
#include "cdcgan/dataset.hpp"
#include "cdcgan/evaluate.hpp"
#include "cdcgan/gradcheck.hpp"
#include "cdcgan/gradcheck_suite.hpp"
#include "cdcgan/image_io.hpp"
#include "cdcgan/losses.hpp"
#include "cdcgan/metrics.hpp"
#include "cdcgan/network.hpp"
#include "cdcgan/parallel.hpp"
#include "cdcgan/resize.hpp"
#include "cdcgan/tensor.hpp"
#include "cdcgan/trainer.hpp"

#endif  // CDCGAN_CDCGAN_HPP

#pragma once

#include <string>

namespace fedplat::util {

// Random (version 4) UUID in canonical 8-4-4-4-12 form.
std::string make_uuid_v4();

}  // namespace fedplat::util

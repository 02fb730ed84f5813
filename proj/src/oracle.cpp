#include "fann/oracle.hpp"

// Header-only; this translation unit anchors the module in the library.

#include "rec.h"

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) {
  table_free(parse_buffer(data, size));
  return 0;
}

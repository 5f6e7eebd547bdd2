#include <stdio.h>

#include "rec.h"

const char *record_kind_name(uint16_t kind) {
  switch (kind) {
    case 0: return "empty";
    case 1: return "text";
    case 2: return "blob";
    default: return "unknown";
  }
}

int format_record(const struct record *r, char *out, size_t n) {
  return snprintf(out, n, "%s len=%u crc=%08x", record_kind_name(r->kind), (unsigned)r->len,
                  (unsigned)r->crc);
}

void print_table(const struct table *t) {
  char line[64];
  for (size_t i = 0; i < t->used; i++) {
    format_record(&t->rows[i], line, sizeof line);
    printf("%zu: %s\n", i, line);
  }
}

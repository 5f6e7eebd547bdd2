#include <stdio.h>
#include <stdlib.h>

#include "rec.h"

void *xmalloc(size_t n) {
  void *p = malloc(n ? n : 1);
  if (!p) {
    log_msg("out of memory");
    abort();
  }
  return p;
}

void xfree(void *p) { free(p); }

size_t clamp_size(size_t v, size_t lo, size_t hi) {
  if (v < lo)
    return lo;
  if (v > hi)
    return hi;
  return v;
}

void log_msg(const char *msg) { fprintf(stderr, "rec: %s\n", msg); }

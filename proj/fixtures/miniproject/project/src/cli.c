#include <stdio.h>
#include <stdlib.h>

#include "rec.h"

int main(int argc, char **argv) {
  static uint8_t data[1 << 16];
  FILE *f;
  size_t n;
  struct table *t;

  if (argc != 2) {
    fprintf(stderr, "usage: %s FILE\n", argv[0]);
    return 2;
  }
  f = fopen(argv[1], "rb");
  if (!f)
    return 2;
  n = fread(data, 1, sizeof data, f);
  fclose(f);
  t = parse_buffer(data, n);
  if (!t)
    return 1;
  print_table(t);
  table_free(t);
  return 0;
}

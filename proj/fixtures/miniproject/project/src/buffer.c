#include "rec.h"

void buf_init(struct buffer *b, const uint8_t *data, size_t size) {
  b->data = data;
  b->size = size;
  b->pos = 0;
}

size_t buf_remaining(const struct buffer *b) { return b->size - b->pos; }

int buf_read_u8(struct buffer *b, uint8_t *out) {
  if (buf_remaining(b) < 1)
    return -1;
  *out = b->data[b->pos++];
  return 0;
}

int buf_read_u16(struct buffer *b, uint16_t *out) {
  uint8_t lo, hi;
  if (buf_read_u8(b, &lo) != 0 || buf_read_u8(b, &hi) != 0)
    return -1;
  *out = (uint16_t)(lo | (hi << 8));
  return 0;
}

int buf_read_u32(struct buffer *b, uint32_t *out) {
  uint16_t lo, hi;
  if (buf_read_u16(b, &lo) != 0 || buf_read_u16(b, &hi) != 0)
    return -1;
  *out = (uint32_t)lo | ((uint32_t)hi << 16);
  return 0;
}

int buf_skip(struct buffer *b, size_t n) {
  if (buf_remaining(b) < n)
    return -1;
  b->pos += n;
  return 0;
}

#include "rec.h"

uint32_t crc_update(uint32_t crc, const uint8_t *p, size_t n) {
  for (size_t i = 0; i < n; i++) {
    crc ^= p[i];
    for (int k = 0; k < 8; k++)
      crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return crc;
}

uint32_t crc_finish(uint32_t crc) { return ~crc; }

uint32_t checksum_record(const struct record *r) {
  uint32_t crc = crc_update(0xFFFFFFFFu, (const uint8_t *)&r->kind, sizeof r->kind);
  crc = crc_update(crc, r->field, r->len);
  return crc_finish(crc);
}

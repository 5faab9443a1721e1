#ifndef EAPFIDO_H
#define EAPFIDO_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EAPFIDO_API __declspec(dllexport)
#else
#define EAPFIDO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/*
 * Status codes. 0 is success; every failure is negative. Protocol failure
 * reasons use the same values, so a report's reason can be passed to
 * eapfido_status_name().
 */
enum {
  EAPFIDO_OK = 0,
  EAPFIDO_E_INVALID_ARGUMENT = -1,
  EAPFIDO_E_STATE = -2,
  EAPFIDO_E_INTERNAL = -3,
  EAPFIDO_E_IO = -4,
  EAPFIDO_E_PARSE = -5,
  EAPFIDO_E_CONFIGURATION = -6,
  EAPFIDO_E_TIMEOUT = -7,
  EAPFIDO_E_TRUNCATED = -10,
  EAPFIDO_E_UNKNOWN_CODE = -11,
  EAPFIDO_E_UNKNOWN_TYPE = -12,
  EAPFIDO_E_UNKNOWN_OPCODE = -13,
  EAPFIDO_E_MALFORMED_PAIR = -14,
  EAPFIDO_E_DUPLICATE_KEY = -15,
  EAPFIDO_E_BAD_BASE64 = -16,
  EAPFIDO_E_INVALID_FIELD_SET = -17,
  EAPFIDO_E_VALUE_TOO_LARGE = -18,
  EAPFIDO_E_INVALID_POINT = -20,
  EAPFIDO_E_PIN_INVALID = -30,
  EAPFIDO_E_NO_CREDENTIALS = -31,
  EAPFIDO_E_USER_PRESENCE_DENIED = -32,
  EAPFIDO_E_RP_MISMATCH = -33,
  EAPFIDO_E_FLAGS_MISSING = -34,
  EAPFIDO_E_BAD_SIGNATURE = -35,
  EAPFIDO_E_MALFORMED_AUTH_DATA = -36,
  EAPFIDO_E_COUNTER_MISMATCH = -37,
  EAPFIDO_E_DUPLICATE_USERNAME = -40,
  EAPFIDO_E_INVALID_USERNAME = -41,
  EAPFIDO_E_UNKNOWN_USER = -42,
  EAPFIDO_E_DUPLICATE_CREDENTIAL_ID = -43,
  EAPFIDO_E_NOT_FOUND = -44,
  EAPFIDO_E_COUNTER_REGRESSION = -45,
  EAPFIDO_E_UNKNOWN_COOKIE_ID = -46,
  EAPFIDO_E_EXPIRED = -47,
  EAPFIDO_E_UNBOUND = -48,
  EAPFIDO_E_DUPLICATE_COOKIE_ID = -49,
  EAPFIDO_E_UNKNOWN_USER_HANDLE = -50,
  EAPFIDO_E_BUFFER_TOO_SMALL = -100
};

#define EAPFIDO_MSK_SIZE 64
#define EAPFIDO_MAX_PACKET_SIZE 65535

/* "BadSignature", "BufferTooSmall", ...; never NULL. */
EAPFIDO_API const char* eapfido_status_name(int status);

/* Detail text of the last failure on the calling thread; "" if none. */
EAPFIDO_API const char* eapfido_last_error(void);

/*
 * Output buffers: the call writes at most `cap` bytes to `out` and the full
 * length to `*out_len`. When `cap` is too small (or `out` is NULL) nothing
 * is written except `*out_len` and EAPFIDO_E_BUFFER_TOO_SMALL is returned.
 * Text outputs are NUL-terminated; `*out_len` excludes the terminator.
 */

/* ---- Packet codec ---- */

/* 0 if `data` is a valid EAP-FIDO packet, else the decode failure. */
EAPFIDO_API int eapfido_packet_check(const uint8_t* data, size_t len);

/* Decoded packet as JSON: code, identifier, op_code and the K=V fields. */
EAPFIDO_API int eapfido_packet_describe(const uint8_t* data, size_t len, char* out, size_t cap,
                                        size_t* out_len);

/* ---- Credential store ---- */

typedef struct eapfido_store eapfido_store;

EAPFIDO_API int eapfido_store_create(eapfido_store** out);
EAPFIDO_API int eapfido_store_load(const char* path, eapfido_store** out);
EAPFIDO_API int eapfido_store_save(const eapfido_store* store, const char* path);
EAPFIDO_API void eapfido_store_free(eapfido_store* store);

EAPFIDO_API int eapfido_store_register_user(eapfido_store* store, const char* username);
/* Ed25519 public key, 32 bytes. */
EAPFIDO_API int eapfido_store_register_credential(eapfido_store* store, const char* username,
                                                  const uint8_t* credential_id, size_t id_len,
                                                  const uint8_t* public_key, size_t key_len,
                                                  int discoverable);
EAPFIDO_API int eapfido_store_credential_counter(const eapfido_store* store,
                                                 const uint8_t* credential_id, size_t id_len,
                                                 uint32_t* counter);
EAPFIDO_API int eapfido_store_has_user(const eapfido_store* store, const char* username);

/* ---- Software authenticator and its client-side state ---- */

/*
 * An authenticator handle also carries the peer's re-authentication token
 * (cookie id and session cookie), persisted together with the credentials.
 */
typedef struct eapfido_authenticator eapfido_authenticator;

EAPFIDO_API int eapfido_authenticator_create(const char* pin, eapfido_authenticator** out);
EAPFIDO_API int eapfido_authenticator_load(const char* path, const char* pin,
                                           eapfido_authenticator** out);
EAPFIDO_API int eapfido_authenticator_save(const eapfido_authenticator* auth, const char* path);
EAPFIDO_API void eapfido_authenticator_free(eapfido_authenticator* auth);

/* Credential id (16 bytes) and Ed25519 public key (32 bytes). */
EAPFIDO_API int eapfido_authenticator_make_credential(eapfido_authenticator* auth,
                                                      const char* rp_id, const uint8_t* user_handle,
                                                      size_t handle_len, int discoverable,
                                                      uint8_t* credential_id, size_t id_cap,
                                                      size_t* id_len, uint8_t* public_key,
                                                      size_t key_cap, size_t* key_len);
EAPFIDO_API int eapfido_authenticator_set_presence_prompt(eapfido_authenticator* auth, int enabled);
EAPFIDO_API int eapfido_authenticator_has_token(const eapfido_authenticator* auth);

/* User handle assigned by the store to `username`. */
EAPFIDO_API int eapfido_store_user_handle(const eapfido_store* store, const char* username,
                                          uint8_t* out, size_t cap, size_t* out_len);

/* ---- Peer (supplicant) ---- */

typedef struct eapfido_peer eapfido_peer;

/*
 * `identity` NULL or "anonymous" selects discoverable credentials. With
 * `use_token` set the peer offers the authenticator's stored token.
 * The authenticator must outlive the peer.
 */
EAPFIDO_API int eapfido_peer_create(eapfido_authenticator* auth, const char* identity,
                                    const char* pin, int use_token, eapfido_peer** out);
EAPFIDO_API void eapfido_peer_free(eapfido_peer* peer);

/* Identity string for the EAP Identity-Response. */
EAPFIDO_API int eapfido_peer_begin(eapfido_peer* peer, char* out, size_t cap, size_t* out_len);

/*
 * Handles one EAP-FIDO request and writes the response. `cap` must be at
 * least EAPFIDO_MAX_PACKET_SIZE; this is checked before any state change.
 * On failure the peer is finished and the reason is returned.
 */
EAPFIDO_API int eapfido_peer_handle(eapfido_peer* peer, const uint8_t* in, size_t in_len,
                                    uint8_t* out, size_t cap, size_t* out_len);

/* EAP-Success: exports the MSK and stores any newly issued token. */
EAPFIDO_API int eapfido_peer_on_success(eapfido_peer* peer, uint8_t msk[EAPFIDO_MSK_SIZE]);
EAPFIDO_API int eapfido_peer_on_failure(eapfido_peer* peer);

/* ---- Server (authentication server) ---- */

typedef struct eapfido_server eapfido_server;

enum { EAPFIDO_ACTION_REQUEST = 1, EAPFIDO_ACTION_SUCCESS = 2, EAPFIDO_ACTION_FAILURE = 3 };

/* The store must outlive the server. */
EAPFIDO_API int eapfido_server_create(eapfido_store* store, const char* rp_id,
                                      eapfido_server** out);
EAPFIDO_API void eapfido_server_free(eapfido_server* server);

/* FIDO-Start request for `identity`; `cap` must be >= EAPFIDO_MAX_PACKET_SIZE. */
EAPFIDO_API int eapfido_server_on_identity(eapfido_server* server, const char* identity,
                                           uint8_t* out, size_t cap, size_t* out_len);

/*
 * Handles one EAP-FIDO response. `*action` says whether to send `out` as the
 * next request, or to send EAP-Success / EAP-Failure (then `*out_len` is 0).
 */
EAPFIDO_API int eapfido_server_handle(eapfido_server* server, const uint8_t* in, size_t in_len,
                                      int* action, uint8_t* out, size_t cap, size_t* out_len);

/* Available only after success. */
EAPFIDO_API int eapfido_server_msk(const eapfido_server* server, uint8_t msk[EAPFIDO_MSK_SIZE]);

/* identity, success, reason, msk_fingerprint, reauthenticated as JSON. */
EAPFIDO_API int eapfido_server_result(const eapfido_server* server, char* out, size_t cap,
                                      size_t* out_len);

/* ---- Scenario harness ---- */

typedef struct eapfido_harness eapfido_harness;
typedef struct eapfido_report eapfido_report;

typedef struct eapfido_harness_options {
  const char* rp_id;
  const char* pin;
  const char* server_side_user;
  const char* discoverable_user;
  int presence_prompt;
  int64_t cookie_ttl_seconds;
} eapfido_harness_options;

/* Defaults: "eap-fido.example", fixture PIN, "john-smith", "jane-doe", prompt on, 8 h. */
EAPFIDO_API void eapfido_harness_options_init(eapfido_harness_options* options);

/* Deterministic fixture with one server-side and one discoverable user. */
EAPFIDO_API int eapfido_harness_create_seeded(uint64_t seed, const eapfido_harness_options* options,
                                              eapfido_harness** out);

/* Shares the store and authenticator; both handles may be freed afterwards. */
EAPFIDO_API int eapfido_harness_create(eapfido_store* store, eapfido_authenticator* auth,
                                       const eapfido_harness_options* options,
                                       eapfido_harness** out);
EAPFIDO_API void eapfido_harness_free(eapfido_harness* harness);

/*
 * Writes the store and the client state (credentials and the peer's token)
 * of the harness. Either path may be NULL to skip it.
 */
EAPFIDO_API int eapfido_harness_save(const eapfido_harness* harness, const char* store_path,
                                     const char* client_path);

/* `seed` NULL draws from system entropy. */
EAPFIDO_API int eapfido_harness_run_scenario(eapfido_harness* harness, const char* kind,
                                             const uint64_t* seed, eapfido_report** out);
EAPFIDO_API int eapfido_harness_run_attack(eapfido_harness* harness, const char* kind,
                                           const uint64_t* seed, eapfido_report** out);
/* Run i uses seed + i when `seed` is given. */
EAPFIDO_API int eapfido_harness_bench(eapfido_harness* harness, const char* kind, int n,
                                      const uint64_t* seed, eapfido_report** out);

EAPFIDO_API void eapfido_report_free(eapfido_report* report);

/* 1 if the run reached its expected outcome (success, or the expected failure). */
EAPFIDO_API int eapfido_report_expected(const eapfido_report* report);
EAPFIDO_API int eapfido_report_success(const eapfido_report* report);
/* 0 on success, else the failure reason as a status code. */
EAPFIDO_API int eapfido_report_reason(const eapfido_report* report);
EAPFIDO_API int eapfido_report_msk_match(const eapfido_report* report);
EAPFIDO_API int eapfido_report_round_trips(const eapfido_report* report);
/* Bench reports give the averages over all runs. */
EAPFIDO_API int64_t eapfido_report_t_total_us(const eapfido_report* report);
EAPFIDO_API int64_t eapfido_report_t_inner_us(const eapfido_report* report);
EAPFIDO_API size_t eapfido_report_frame_count(const eapfido_report* report);
EAPFIDO_API int eapfido_report_frame_label(const eapfido_report* report, size_t index, char* out,
                                           size_t cap, size_t* out_len);
/* Number of run secrets found in the transcript; 0 for a clean run. */
EAPFIDO_API size_t eapfido_report_leak_count(const eapfido_report* report);
EAPFIDO_API int eapfido_report_json(const eapfido_report* report, char* out, size_t cap,
                                    size_t* out_len);

#ifdef __cplusplus
}
#endif

#endif

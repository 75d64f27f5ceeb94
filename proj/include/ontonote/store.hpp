#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ontonote/clock.hpp"
#include "ontonote/error.hpp"
#include "ontonote/json_io.hpp"

namespace ontonote {

enum class EntityKind { User, Group, Document, Ontology, Activity, Annotation, Grade };

/// Directory name under the store root: users, groups, documents, ...
std::string_view directory_name(EntityKind kind);
std::string_view id_prefix(EntityKind kind);

struct Envelope {
  EntityKind kind = EntityKind::User;
  std::string id;
  std::uint64_t revision = 0;
  Json payload;
  std::string updated;
};

Json envelope_to_json(const Envelope& e);
Envelope envelope_from_json(EntityKind kind, const Json& j);

/// Raised by cas_update when the stored revision differs from the expected
/// one; carries the current envelope.
class ConflictError : public Error {
 public:
  explicit ConflictError(Envelope current)
      : Error(ErrorCode::Conflict, "revision conflict on " + current.id + " (current revision " +
                                       std::to_string(current.revision) + ")"),
        current_(std::move(current)) {}
  ConflictError(Envelope current, const std::string& message)
      : Error(ErrorCode::Conflict, message), current_(std::move(current)) {}

  [[nodiscard]] const Envelope& current() const noexcept { return current_; }

 private:
  Envelope current_;
};

struct RecoveryReport {
  std::size_t removed_temp_files = 0;
  std::size_t entities = 0;
  std::vector<std::string> unreadable;  // paths that failed to parse
};

/// Revisioned JSON-file-per-entity store:
///
///   <root>/<kind>/<id>.json        one envelope per entity
///   <root>/<kind>/<id>.log.jsonl   append-only edit log (ontologies, activities)
///   <root>/<kind>/<id>.lock        per-entity write lock (flock)
///   <root>/idempotency/<hash>.json replayable responses keyed by request
///
/// Every write goes to a temporary file that is fsynced and renamed over the
/// target, so readers only ever see complete envelopes. Writes to one entity
/// are serialized by an exclusive flock on its lock file, which also covers
/// writers in other processes. Cross-entity operations are not transactional.
class Store {
 public:
  explicit Store(std::filesystem::path root, Clock clock = utc_now);

  [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

  /// Validates the payload for its kind and persists revision 0. The payload's
  /// "id" field is set to the assigned id.
  Envelope put_new(EntityKind kind, Json payload, std::optional<std::string> id = std::nullopt);

  /// Writes revision expected + 1, or throws ConflictError / NotFound.
  Envelope cas_update(EntityKind kind, const std::string& id, std::uint64_t expected, Json payload);

  /// Persists an envelope verbatim (archive import). Throws AlreadyExists.
  void put_verbatim(const Envelope& e);

  [[nodiscard]] std::optional<Envelope> get(EntityKind kind, const std::string& id) const;
  [[nodiscard]] Envelope require(EntityKind kind, const std::string& id) const;
  [[nodiscard]] std::vector<Envelope> list(EntityKind kind) const;

  void append_log(EntityKind kind, const std::string& id, const Json& entry);
  [[nodiscard]] std::vector<Json> read_log(EntityKind kind, const std::string& id) const;

  /// Returns the record stored under `key`, or runs `produce`, stores its
  /// result and returns it. Calls with one key are serialized, so a retried
  /// request replays the first response instead of repeating the write.
  /// Nothing is recorded when `produce` throws.
  Json once(const std::string& key, const std::function<Json()>& produce);

  /// Drops temporary files left by interrupted writes and re-reads every
  /// entity. Run on construction.
  RecoveryReport recover();

 private:
  [[nodiscard]] std::filesystem::path path_of(EntityKind kind, const std::string& id) const;
  void write_envelope(const Envelope& e) const;
  std::string fresh_id(EntityKind kind) const;

  std::filesystem::path root_;
  Clock clock_;
};

/// Decodes and checks a payload for its kind; throws Validation (or a more
/// specific domain code) when it is not a well-formed entity.
void validate_payload(EntityKind kind, const Json& payload);

/// Atomically replaces `path` with `data` (temp file, fsync, rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& data);

}  // namespace ontonote

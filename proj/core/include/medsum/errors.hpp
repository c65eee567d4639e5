#pragma once

#include <stdexcept>
#include <string>

namespace medsum {

// Base of every exception the library throws. The four subclasses group
// failures by the CLI exit code they map to (2 data, 3 numeric, 4 checkpoint,
// 5 compatibility).
class MedsumError : public std::runtime_error {
 public:
  explicit MedsumError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public MedsumError {
 public:
  using MedsumError::MedsumError;
};

class NumericError : public MedsumError {
 public:
  using MedsumError::MedsumError;
};

class CheckpointError : public MedsumError {
 public:
  using MedsumError::MedsumError;
};

class CompatError : public MedsumError {
 public:
  using MedsumError::MedsumError;
};

// ---- corpus / pipeline ----

class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, int line)
      : DataError("parse error at line " + std::to_string(line) + ": " + msg),
        line(line) {}
  int line;
};

class MissingField : public DataError {
 public:
  MissingField(const std::string& field, int line)
      : DataError("line " + std::to_string(line) + ": missing or empty field \"" +
                  field + "\""),
        field(field),
        line(line) {}
  std::string field;
  int line;
};

class DuplicateId : public DataError {
 public:
  DuplicateId(const std::string& id, int first_line, int second_line)
      : DataError("duplicate record id \"" + id + "\" on lines " +
                  std::to_string(first_line) + " and " + std::to_string(second_line)),
        id(id),
        first_line(first_line),
        second_line(second_line) {}
  std::string id;
  int first_line;
  int second_line;
};

class EmptyCorpus : public DataError {
 public:
  using DataError::DataError;
};

class BadRatios : public DataError {
 public:
  using DataError::DataError;
};

class TooFewRecords : public DataError {
 public:
  using DataError::DataError;
};

class IdOutOfRange : public DataError {
 public:
  using DataError::DataError;
};

// ---- numeric engine / model ----

class ShapeMismatch : public DataError {
 public:
  using DataError::DataError;
};

class NonFinite : public NumericError {
 public:
  using NumericError::NumericError;
};

class TargetOutOfRange : public DataError {
 public:
  using DataError::DataError;
};

class DetachedTensor : public DataError {
 public:
  using DataError::DataError;
};

class TokenOutOfRange : public DataError {
 public:
  using DataError::DataError;
};

class SourceTooLong : public DataError {
 public:
  using DataError::DataError;
};

class EmptySource : public DataError {
 public:
  using DataError::DataError;
};

class EmptyBatch : public DataError {
 public:
  using DataError::DataError;
};

class LengthOverflow : public DataError {
 public:
  using DataError::DataError;
};

// ---- checkpoints / compatibility ----

class IoError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VersionMismatch : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class CorruptPayload : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VocabMismatch : public CompatError {
 public:
  using CompatError::CompatError;
};

}  // namespace medsum

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace maskaudit {

class AuditError : public std::runtime_error {
 public:
  explicit AuditError(std::string what) : std::runtime_error(std::move(what)) {}
};

enum class CorpusErrorCode {
  IoError,
  MalformedRow,
  MissingBlank,
  MultipleBlanks,
  BadGender,
  BadNumber,
  LanguageMismatch,
  DuplicateId,
  TextMismatch,
  UnknownCategory,
};

class CorpusError : public AuditError {
 public:
  CorpusError(CorpusErrorCode code, std::string what)
      : AuditError(std::move(what)), code_(code) {}
  CorpusErrorCode code() const { return code_; }

 private:
  CorpusErrorCode code_;
};

enum class ProbeErrorCode {
  InvalidArgument,
  BackendUnavailable,
  MalformedBackendResponse,
  ReplayMiss,
  CorruptRecord,
  DepthConflict,
  CampaignFailed,
  StoreLocked,
  IoError,
};

class ProbeError : public AuditError {
 public:
  ProbeError(ProbeErrorCode code, std::string what)
      : AuditError(std::move(what)), code_(code) {}
  ProbeErrorCode code() const { return code_; }

 private:
  ProbeErrorCode code_;
};

enum class HonestErrorCode {
  EmptyInput,
  InsufficientDepth,
  MixedModels,
  UnknownTemplate,
};

class HonestError : public AuditError {
 public:
  HonestError(HonestErrorCode code, std::string what)
      : AuditError(std::move(what)), code_(code) {}
  HonestErrorCode code() const { return code_; }

 private:
  HonestErrorCode code_;
};

enum class ToxicityErrorCode {
  InvalidConfig,
  TranslationUnavailable,
  ToxicityApiUnavailable,
  AttributeMissing,
  MalformedResponse,
  ReplayMiss,
  EmptyInput,
  UnknownTemplate,
  DirectScoringUnsupported,
  IoError,
};

class ToxicityError : public AuditError {
 public:
  ToxicityError(ToxicityErrorCode code, std::string what)
      : AuditError(std::move(what)), code_(code) {}
  ToxicityErrorCode code() const { return code_; }

 private:
  ToxicityErrorCode code_;
};

enum class ReportErrorCode {
  EmptyReport,
  MixedK,
  MalformedReport,
  IoError,
};

class ReportError : public AuditError {
 public:
  ReportError(ReportErrorCode code, std::string what)
      : AuditError(std::move(what)), code_(code) {}
  ReportErrorCode code() const { return code_; }

 private:
  ReportErrorCode code_;
};

class ConfigError : public AuditError {
 public:
  explicit ConfigError(std::string what) : AuditError(std::move(what)) {}
};

}  // namespace maskaudit

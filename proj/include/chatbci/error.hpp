// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace chatbci {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-parseable name used by the CLI and the HTTP layer.
class Error : public std::runtime_error
{
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind))
    {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define CHATBCI_DEFINE_ERROR(Name)                                            \
    class Name : public Error                                                 \
    {                                                                         \
    public:                                                                   \
        explicit Name(const std::string& message) : Error(#Name, message) {}  \
    };

CHATBCI_DEFINE_ERROR(FormatError)
CHATBCI_DEFINE_ERROR(IntegrityError)
CHATBCI_DEFINE_ERROR(LabelError)
CHATBCI_DEFINE_ERROR(IOError)
CHATBCI_DEFINE_ERROR(PreconditionError)
CHATBCI_DEFINE_ERROR(SpecError)
CHATBCI_DEFINE_ERROR(BoundsError)
CHATBCI_DEFINE_ERROR(EmptyClassError)
CHATBCI_DEFINE_ERROR(ConfigError)
CHATBCI_DEFINE_ERROR(ShapeError)
CHATBCI_DEFINE_ERROR(SplitError)
CHATBCI_DEFINE_ERROR(ProviderError)
CHATBCI_DEFINE_ERROR(StateError)
CHATBCI_DEFINE_ERROR(GenerationError)
CHATBCI_DEFINE_ERROR(NotFoundError)

#undef CHATBCI_DEFINE_ERROR

} // namespace chatbci

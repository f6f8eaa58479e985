#include "sms/api/auth.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <nlohmann/json.hpp>

#include "sms/core/errors.hpp"
#include "sms/storage/blob_store.hpp"

namespace sms::api {

using nlohmann::json;

std::string_view to_string(PrincipalKind k) {
  switch (k) {
    case PrincipalKind::anonymous: return "anonymous";
    case PrincipalKind::user: return "user";
    case PrincipalKind::service: return "service";
  }
  return "anonymous";
}

Principal Principal::of(PrincipalKind kind, const storage::Account& a) {
  Principal p;
  p.kind = kind;
  p.account = a.id;
  p.groups = a.groups;
  p.roles = a.roles;
  return p;
}

bool authorize(const Principal& p, Action action, const Entity* entity) {
  if (action == Action::curate) return p.authenticated() && p.is_curator();
  if (action == Action::create) return p.authenticated();
  if (!entity) return false;
  if (const auto* c = std::get_if<Contact>(entity)) {
    if (!p.authenticated()) return false;
    if (action == Action::read || p.is_admin()) return true;
    return !c->account || (p.account && *c->account == *p.account);
  }
  const auto* group = owner_group_of(*entity);
  const bool member = p.is_admin() || (group && p.in_group(*group));
  if (action == Action::read) {
    switch (visibility_of(*entity)) {
      case Visibility::public_: return true;
      case Visibility::internal: return p.authenticated();
      case Visibility::private_: return p.authenticated() && member;
    }
    return false;
  }
  return p.authenticated() && member;
}

namespace {

std::string to_hex(const unsigned char* data, std::size_t n) {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 15];
  }
  return out;
}

std::optional<std::string> from_hex(std::string_view s) {
  if (s.size() % 2) return std::nullopt;
  std::string out;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  for (std::size_t i = 0; i < s.size(); i += 2) {
    int hi = nibble(s[i]), lo = nibble(s[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>(hi * 16 + lo);
  }
  return out;
}

bool equal_ct(std::string_view a, std::string_view b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

std::string pbkdf2(std::string_view password, std::string_view salt, int iterations) {
  unsigned char out[32];
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()),
                        reinterpret_cast<const unsigned char*>(salt.data()), static_cast<int>(salt.size()), iterations,
                        EVP_sha256(), sizeof out, out) != 1)
    throw Error(ErrorCode::internal, "password hashing failed");
  return to_hex(out, sizeof out);
}

[[noreturn]] void unauthorized(const std::string& why) { throw Error(ErrorCode::unauthorized, why); }

}  // namespace

std::string random_hex(std::size_t bytes) {
  std::string buf(bytes, '\0');
  if (RAND_bytes(reinterpret_cast<unsigned char*>(buf.data()), static_cast<int>(bytes)) != 1)
    throw Error(ErrorCode::internal, "no randomness available");
  return to_hex(reinterpret_cast<const unsigned char*>(buf.data()), bytes);
}

std::string hash_password(std::string_view password, int iterations) {
  auto salt = random_hex(16);
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + salt + "$" + pbkdf2(password, *from_hex(salt), iterations);
}

bool verify_password(std::string_view password, std::string_view encoded) {
  auto parts = std::vector<std::string>{};
  std::string cur;
  for (char c : encoded) {
    if (c == '$') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 4 || parts[0] != "pbkdf2-sha256") return false;
  int iterations = 0;
  try {
    iterations = std::stoi(parts[1]);
  } catch (const std::exception&) {
    return false;
  }
  auto salt = from_hex(parts[2]);
  if (!salt || iterations <= 0) return false;
  return equal_ct(pbkdf2(password, *salt, iterations), parts[3]);
}

std::string base64url(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  while (!out.empty() && out.back() == '=') out.pop_back();
  for (auto& c : out) {
    if (c == '+') c = '-';
    if (c == '/') c = '_';
  }
  return out;
}

std::optional<std::string> base64url_decode(std::string_view text) {
  std::string s(text);
  for (auto& c : s) {
    if (c == '-') c = '+';
    else if (c == '_') c = '/';
    else if (!(std::isalnum(static_cast<unsigned char>(c)))) return std::nullopt;
  }
  std::size_t pad = (4 - s.size() % 4) % 4;
  if (pad == 3) return std::nullopt;
  s.append(pad, '=');
  std::string out(s.size() / 4 * 3, '\0');
  int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()), reinterpret_cast<const unsigned char*>(s.data()),
                          static_cast<int>(s.size()));
  if (n < 0) return std::nullopt;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

LocalTokenIssuer::LocalTokenIssuer(std::string secret, std::string issuer, std::chrono::seconds ttl)
    : secret_(std::move(secret)), issuer_(std::move(issuer)), ttl_(ttl) {
  if (secret_.size() < 16) throw Error(ErrorCode::bad_request, "token secret must be at least 16 bytes");
}

std::string LocalTokenIssuer::sign(std::string_view data) const {
  unsigned char mac[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), secret_.data(), static_cast<int>(secret_.size()), reinterpret_cast<const unsigned char*>(data.data()),
       data.size(), mac, &len);
  return base64url(std::string_view(reinterpret_cast<const char*>(mac), len));
}

std::string LocalTokenIssuer::issue(const AccountId& subject, TimeInstant now) const {
  auto iat = now.micros() / 1'000'000;
  json header{{"alg", "HS256"}, {"typ", "JWT"}};
  json claims{{"sub", subject.str()}, {"iss", issuer_}, {"iat", iat}, {"exp", iat + ttl_.count()}};
  auto data = base64url(header.dump()) + "." + base64url(claims.dump());
  return data + "." + sign(data);
}

TokenClaims LocalTokenIssuer::verify(std::string_view token, TimeInstant now) const {
  auto first = token.find('.');
  auto second = first == std::string_view::npos ? first : token.find('.', first + 1);
  if (second == std::string_view::npos || token.find('.', second + 1) != std::string_view::npos)
    unauthorized("malformed token");
  auto data = token.substr(0, second);
  if (!equal_ct(sign(data), token.substr(second + 1))) unauthorized("bad token signature");
  auto header = base64url_decode(token.substr(0, first));
  auto body = base64url_decode(token.substr(first + 1, second - first - 1));
  if (!header || !body) unauthorized("malformed token");
  try {
    auto h = json::parse(*header);
    if (h.at("alg") != "HS256") unauthorized("unsupported token algorithm");
    auto c = json::parse(*body);
    if (c.at("iss") != issuer_) unauthorized("token from another issuer");
    TokenClaims claims{AccountId{c.at("sub").get<std::string>()},
                       TimeInstant::from_seconds(c.at("iat").get<std::int64_t>()),
                       TimeInstant::from_seconds(c.at("exp").get<std::int64_t>())};
    if (!(now < claims.expires_at)) unauthorized("token expired");
    return claims;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    unauthorized("malformed token");
  }
}

IssuedKey issue_api_key(storage::Store& store, const AccountId& account, std::string label, TimeInstant now) {
  if (!store.account(account)) throw Error(ErrorCode::not_found, "no account " + account.str());
  IssuedKey out;
  out.key.key_id = "k" + random_hex(8);
  auto secret = random_hex(24);
  out.key.secret_hash = storage::sha256_hex(secret);
  out.key.account = account;
  out.key.label = std::move(label);
  out.key.created_at = now;
  store.put_api_key(out.key);
  out.token = out.key.key_id + "." + secret;
  return out;
}

Authenticator::Authenticator(const storage::Store& store, std::shared_ptr<const TokenVerifier> verifier)
    : store_(store), verifier_(std::move(verifier)) {}

Principal Authenticator::authenticate(const std::optional<std::string>& api_key,
                                      const std::optional<std::string>& authorization, TimeInstant now) const {
  if (api_key) {
    auto dot = api_key->find('.');
    if (dot == std::string::npos) unauthorized("malformed api key");
    auto key = store_.api_key(api_key->substr(0, dot));
    if (!key || key->revoked || !equal_ct(key->secret_hash, storage::sha256_hex(api_key->substr(dot + 1))))
      unauthorized("invalid api key");
    auto account = store_.account(key->account);
    if (!account || account->disabled) unauthorized("api key account is disabled");
    return Principal::of(PrincipalKind::service, *account);
  }
  if (authorization) {
    constexpr std::string_view scheme = "Bearer ";
    if (authorization->size() <= scheme.size() || authorization->compare(0, scheme.size(), scheme) != 0)
      unauthorized("unsupported authorization scheme");
    if (!verifier_) unauthorized("bearer tokens are not accepted");
    auto claims = verifier_->verify(std::string_view(*authorization).substr(scheme.size()), now);
    auto account = store_.account(claims.subject);
    if (!account || account->disabled) unauthorized("account is disabled");
    return Principal::of(PrincipalKind::user, *account);
  }
  return Principal::anonymous();
}

storage::Account Authenticator::login(std::string_view username, std::string_view password) const {
  auto account = store_.account_by_username(username);
  if (!account || account->disabled || account->password_hash.empty() ||
      !verify_password(password, account->password_hash))
    unauthorized("wrong username or password");
  return *account;
}

}  // namespace sms::api

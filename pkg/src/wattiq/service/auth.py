"""Accounts, device credentials, and expiring session tokens."""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass

_SCRYPT_N, _SCRYPT_R, _SCRYPT_P = 2**14, 8, 1


@dataclass(frozen=True)
class ApiCredential:
    device_id: str
    api_key: str
    owner: str


class UserAccount:
    """Username plus a salted scrypt verifier; the password is never kept."""

    def __init__(self, username: str, salt: bytes, verifier: bytes):
        self.username = username
        self._salt = salt
        self._verifier = verifier

    @classmethod
    def from_password(cls, username: str, password: str) -> "UserAccount":
        salt = secrets.token_bytes(16)
        return cls(username, salt, _scrypt(password, salt))

    def verify(self, password: str) -> bool:
        return hmac.compare_digest(_scrypt(password, self._salt), self._verifier)


def _scrypt(password: str, salt: bytes) -> bytes:
    return hashlib.scrypt(
        password.encode("utf-8"), salt=salt, n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P
    )


class SessionManager:
    def __init__(self, ttl_s: float = 86400.0, clock=time.time):
        self.ttl_s = ttl_s
        self._clock = clock
        self._sessions: dict[str, tuple[str, float]] = {}
        self._lock = threading.Lock()

    def create(self, username: str) -> tuple[str, int]:
        token = secrets.token_hex(16)
        expires = self._clock() + self.ttl_s
        with self._lock:
            self._sessions[token] = (username, expires)
        return token, int(expires)

    def resolve(self, token: str) -> str | None:
        """Username for a live token, else None (expired tokens are purged)."""
        with self._lock:
            entry = self._sessions.get(token)
            if entry is None:
                return None
            username, expires = entry
            if self._clock() >= expires:
                del self._sessions[token]
                return None
            return username


class AuthRegistry:
    """Users, device credentials, and who owns which device."""

    def __init__(self, users: list[UserAccount], credentials: list[ApiCredential]):
        self._users = {u.username: u for u in users}
        self._credentials = {c.device_id: c for c in credentials}
        # a throwaway account keeps verify timing uniform for unknown users
        self._decoy = UserAccount.from_password("", secrets.token_hex(8))

    def authenticate(self, username: str, password: str) -> bool:
        account = self._users.get(username)
        if account is None:
            self._decoy.verify(password)
            return False
        return account.verify(password)

    def device_credential(self, device_id: str) -> ApiCredential | None:
        return self._credentials.get(device_id)

    def check_api_key(self, device_id: str, api_key: str) -> bool:
        cred = self._credentials.get(device_id)
        if cred is None:
            hmac.compare_digest(api_key, api_key)
            return False
        return hmac.compare_digest(cred.api_key, api_key)

    def owns(self, username: str, device_id: str) -> bool:
        cred = self._credentials.get(device_id)
        return cred is not None and cred.owner == username

    def owner_of(self, device_id: str) -> str | None:
        cred = self._credentials.get(device_id)
        return cred.owner if cred else None

    def recipients(self) -> dict[str, str]:
        return {device_id: cred.owner for device_id, cred in self._credentials.items()}

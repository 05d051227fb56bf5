import PIL.Image
from Crypto.Cipher import AES
